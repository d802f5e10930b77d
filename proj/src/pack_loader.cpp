#include <algorithm>
#include <fstream>
#include <sstream>

#include "construe/pack.hpp"
#include "construe/unicode.hpp"
#include "json.hpp"

namespace construe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kComponents[] = {"schema",     "paradigms", "lexicon", "government",
                                       "constructs", "hierarchy", "syntax"};

constexpr const char* kCefrLevels[] = {"A1", "A2", "B1", "B2", "C1", "C2"};

class PackReader {
 public:
  explicit PackReader(fs::path dir) : dir_(std::move(dir)) {}

  std::vector<Violation> run() {
    if (!fs::is_directory(dir_)) {
      add(ErrorCode::MissingFile, dir_.string(), "pack directory does not exist");
      return violations_;
    }
    const auto manifest_path = dir_ / "manifest.json";
    if (!fs::exists(manifest_path)) {
      add(ErrorCode::MissingFile, manifest_path.string(), "pack manifest not found");
      return violations_;
    }
    pack_.root = dir_;
    json manifest;
    if (!read_json("manifest.json", manifest)) return violations_;
    if (!read_manifest(manifest)) return violations_;

    json docs[std::size(kComponents)];
    for (std::size_t i = 0; i < std::size(kComponents); ++i) {
      if (!read_json(component_files_[kComponents[i]], docs[i])) return violations_;
    }
    read_schema(docs[0]);
    if (!violations_.empty()) return violations_;
    read_paradigms(docs[1]);
    read_lexicon(docs[2]);
    read_syntax(docs[6]);
    read_hierarchy(docs[5]);
    read_government(docs[3]);
    read_constructs(docs[4]);
    if (violations_.empty()) check_lexicon_forms();
    if (violations_.empty()) check_links();
    if (gold_file_) read_gold();
    if (violations_.empty()) pack_.build_indexes();
    return violations_;
  }

  LanguagePack take() { return std::move(pack_); }

 private:
  // -- plumbing --------------------------------------------------------------

  void add(ErrorCode code, std::string pointer, std::string message) {
    violations_.push_back({code, std::move(pointer), std::move(message)});
  }

  std::string ptr(const std::string& file, const std::string& path) const {
    return file + "#" + path;
  }

  bool read_json(const std::string& file, json& out) {
    const auto path = dir_ / file;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      add(ErrorCode::MissingFile, path.string(), "component file not found");
      return false;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    out = json::parse(text, nullptr, false);
    if (out.is_discarded()) {
      add(ErrorCode::SchemaViolation, file, "not valid JSON");
      return false;
    }
    if (!unicode::is_nfc(text)) add(ErrorCode::SchemaViolation, file, "text is not NFC-normalized");
    return true;
  }

  std::optional<std::string> str(const json& obj, const char* key, const std::string& file,
                                 const std::string& path, bool required) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) add(ErrorCode::SchemaViolation, ptr(file, path + "/" + key), "missing required string");
      return std::nullopt;
    }
    if (!it->is_string()) {
      add(ErrorCode::SchemaViolation, ptr(file, path + "/" + key), "expected string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::vector<std::string> str_list(const json& obj, const char* key, const std::string& file,
                                    const std::string& path) {
    std::vector<std::string> out;
    const auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (it->is_string()) {
      out.push_back(it->get<std::string>());
      return out;
    }
    if (!it->is_array()) {
      add(ErrorCode::SchemaViolation, ptr(file, path + "/" + key), "expected string or array of strings");
      return out;
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_string()) {
        add(ErrorCode::SchemaViolation, ptr(file, path + "/" + key + "/" + std::to_string(i)), "expected string");
        continue;
      }
      out.push_back((*it)[i].get<std::string>());
    }
    return out;
  }

  const json* array(const json& obj, const char* key, const std::string& file, const std::string& path,
                    bool required = true) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) add(ErrorCode::SchemaViolation, ptr(file, path + "/" + key), "missing required array");
      return nullptr;
    }
    if (!it->is_array()) {
      add(ErrorCode::SchemaViolation, ptr(file, path + "/" + key), "expected array");
      return nullptr;
    }
    return &*it;
  }

  void check_bundle(const FeatureBundle& bundle, const std::string& pointer) {
    for (const auto& [k, v] : bundle) {
      if (!pack_.schema.has_category(k))
        add(ErrorCode::DanglingReference, pointer, "undefined feature category '" + k + "'");
      else if (!pack_.schema.has_value(k, v))
        add(ErrorCode::DanglingReference, pointer, "undefined value '" + v + "' for feature '" + k + "'");
    }
  }

  void check_constraint(const FeatureConstraint& c, const std::string& pointer) {
    for (const auto& [k, vs] : c.allowed()) {
      if (!pack_.schema.has_category(k)) {
        add(ErrorCode::DanglingReference, pointer, "undefined feature category '" + k + "'");
        continue;
      }
      for (const auto& v : vs)
        if (!pack_.schema.has_value(k, v))
          add(ErrorCode::DanglingReference, pointer, "undefined value '" + v + "' for feature '" + k + "'");
    }
  }

  void check_pos(const std::string& pos, const std::string& pointer) {
    if (!pack_.schema.has_pos(pos))
      add(ErrorCode::DanglingReference, pointer, "undefined part of speech '" + pos + "'");
  }

  std::optional<FeatureBundle> bundle(const std::string& text, const std::string& pointer) {
    try {
      auto b = FeatureBundle::parse(text);
      check_bundle(b, pointer);
      return b;
    } catch (const Error& e) {
      add(ErrorCode::SchemaViolation, pointer, e.what());
      return std::nullopt;
    }
  }

  std::optional<std::regex> regex(const std::string& source, const std::string& pointer) {
    try {
      return std::regex(source, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      add(ErrorCode::SchemaViolation, pointer, std::string("invalid regular expression: ") + e.what());
      return std::nullopt;
    }
  }

  // -- manifest ----------------------------------------------------------------

  bool read_manifest(const json& m) {
    const std::string file = "manifest.json";
    if (!m.is_object()) {
      add(ErrorCode::SchemaViolation, ptr(file, ""), "manifest must be an object");
      return false;
    }
    if (auto lang = str(m, "language", file, "", true)) pack_.language = *lang;
    if (auto name = str(m, "name", file, "", false)) pack_.name = *name;
    const auto comps = m.find("components");
    if (comps == m.end() || !comps->is_object()) {
      add(ErrorCode::SchemaViolation, ptr(file, "/components"), "missing components object");
      return false;
    }
    for (const char* key : kComponents) {
      auto f = str(*comps, key, file, "/components", true);
      if (f) component_files_[key] = *f;
    }
    if (auto gold = str(m, "gold", file, "", false)) gold_file_ = *gold;
    return violations_.empty();
  }

  // -- schema ------------------------------------------------------------------

  void read_schema(const json& s) {
    const std::string file = component_files_["schema"];
    pack_.schema.parts_of_speech = str_list(s, "pos", file, "");
    if (pack_.schema.parts_of_speech.empty())
      add(ErrorCode::SchemaViolation, ptr(file, "/pos"), "schema needs at least one part of speech");
    const auto it = s.find("features");
    if (it == s.end() || !it->is_object()) {
      add(ErrorCode::SchemaViolation, ptr(file, "/features"), "missing features object");
      return;
    }
    for (const auto& [cat, values] : it->items()) {
      auto list = str_list(*it, cat.c_str(), file, "/features");
      std::set<std::string> seen(list.begin(), list.end());
      if (seen.size() != list.size())
        add(ErrorCode::SchemaViolation, ptr(file, "/features/" + cat), "duplicate feature value");
      if (list.empty()) add(ErrorCode::SchemaViolation, ptr(file, "/features/" + cat), "category has no values");
      pack_.schema.categories[cat] = std::move(list);
    }
  }

  // -- paradigms ---------------------------------------------------------------

  void read_paradigms(const json& doc) {
    const std::string file = component_files_["paradigms"];
    const json* list = array(doc, "paradigms", file, "");
    if (!list) return;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& p = (*list)[i];
      const std::string path = "/paradigms/" + std::to_string(i);
      Paradigm par;
      if (auto id = str(p, "id", file, path, true)) par.id = *id;
      if (!ids.insert(par.id).second) add(ErrorCode::SchemaViolation, ptr(file, path + "/id"), "duplicate paradigm id '" + par.id + "'");
      if (auto pos = str(p, "pos", file, path, true)) {
        par.pos = *pos;
        check_pos(par.pos, ptr(file, path + "/pos"));
      }
      const json* slots = array(p, "slots", file, path);
      if (!slots) continue;
      if (slots->empty()) add(ErrorCode::SchemaViolation, ptr(file, path + "/slots"), "paradigm has no slots");
      std::set<FeatureBundle> seen;
      for (std::size_t k = 0; k < slots->size(); ++k) {
        const json& s = (*slots)[k];
        const std::string spath = path + "/slots/" + std::to_string(k);
        ParadigmSlot slot;
        auto feats = str(s, "features", file, spath, true);
        auto form = str(s, "form", file, spath, true);
        if (!feats || !form) continue;
        auto b = bundle(*feats, ptr(file, spath + "/features"));
        if (!b) continue;
        slot.features = *b;
        if (!seen.insert(slot.features).second)
          add(ErrorCode::SchemaViolation, ptr(file, spath + "/features"), "duplicate slot features '" + *feats + "'");
        try {
          slot.rule = RealizationRule::parse(*form);
        } catch (const Error& e) {
          add(ErrorCode::SchemaViolation, ptr(file, spath + "/form"), e.what());
          continue;
        }
        par.stem_count = std::max(par.stem_count, slot.rule.stem + 1);
        par.slots.push_back(std::move(slot));
      }
      if (auto cit = str(p, "citation", file, path, false)) {
        auto b = bundle(*cit, ptr(file, path + "/citation"));
        bool found = false;
        if (b) {
          for (std::size_t k = 0; k < par.slots.size(); ++k)
            if (par.slots[k].features == *b) {
              par.citation_slot = k;
              found = true;
            }
        }
        if (!found) add(ErrorCode::DanglingReference, ptr(file, path + "/citation"), "citation features match no slot");
      }
      pack_.paradigms.push_back(std::move(par));
    }
  }

  // -- lexicon -----------------------------------------------------------------

  void read_lexicon(const json& doc) {
    const std::string file = component_files_["lexicon"];
    std::map<std::string, std::size_t> paradigm_ids;
    for (std::size_t i = 0; i < pack_.paradigms.size(); ++i) paradigm_ids[pack_.paradigms[i].id] = i;
    const json* list = array(doc, "entries", file, "");
    std::set<int> ranks;
    if (list) {
      for (std::size_t i = 0; i < list->size(); ++i) {
        const json& e = (*list)[i];
        const std::string path = "/entries/" + std::to_string(i);
        Lexeme lx;
        if (auto v = str(e, "lemma", file, path, true)) lx.lemma = *v;
        if (auto v = str(e, "pos", file, path, true)) {
          lx.pos = *v;
          check_pos(lx.pos, ptr(file, path + "/pos"));
        }
        if (auto v = str(e, "paradigm", file, path, true)) lx.paradigm = *v;
        if (auto v = str(e, "gloss", file, path, false)) lx.gloss = *v;
        lx.stems = str_list(e, "stems", file, path);
        if (lx.stems.empty()) add(ErrorCode::SchemaViolation, ptr(file, path + "/stems"), "lexeme '" + lx.lemma + "' has no stems");
        const auto rank = e.find("rank");
        if (rank == e.end() || !rank->is_number_integer() || rank->get<int>() < 1) {
          add(ErrorCode::SchemaViolation, ptr(file, path + "/rank"), "lexeme '" + lx.lemma + "' needs a positive integer rank");
        } else {
          lx.frequency_rank = rank->get<int>();
          if (!ranks.insert(lx.frequency_rank).second)
            add(ErrorCode::SchemaViolation, ptr(file, path + "/rank"), "duplicate frequency rank " + std::to_string(lx.frequency_rank));
        }
        if (const auto links = e.find("links"); links != e.end()) {
          if (!links->is_object()) {
            add(ErrorCode::SchemaViolation, ptr(file, path + "/links"), "links must be an object");
          } else {
            for (const auto& [k, v] : links->items()) {
              if (!v.is_string()) add(ErrorCode::SchemaViolation, ptr(file, path + "/links/" + k), "expected string");
              else lx.links[k] = v.get<std::string>();
            }
          }
        }
        const auto pit = paradigm_ids.find(lx.paradigm);
        if (pit == paradigm_ids.end()) {
          add(ErrorCode::DanglingReference, ptr(file, path + "/paradigm"),
              "lexeme '" + lx.lemma + "' references unknown paradigm '" + lx.paradigm + "'");
        } else {
          lx.paradigm_index = pit->second;
          const Paradigm& par = pack_.paradigms[pit->second];
          if (par.pos != lx.pos)
            add(ErrorCode::SchemaViolation, ptr(file, path + "/pos"),
                "lexeme '" + lx.lemma + "' pos " + lx.pos + " differs from paradigm pos " + par.pos);
          if (lx.stems.size() < par.stem_count)
            add(ErrorCode::SchemaViolation, ptr(file, path + "/stems"),
                "lexeme '" + lx.lemma + "' has " + std::to_string(lx.stems.size()) + " stems, paradigm '" + par.id +
                    "' needs " + std::to_string(par.stem_count));
        }
        pack_.lexicon.push_back(std::move(lx));
      }
    }
    if (const auto classes = doc.find("classes"); classes != doc.end()) {
      if (!classes->is_object()) {
        add(ErrorCode::SchemaViolation, ptr(file, "/classes"), "classes must be an object");
        return;
      }
      for (const auto& [id, c] : classes->items()) {
        const std::string path = "/classes/" + id;
        LemmaClass lc;
        lc.id = id;
        for (auto& l : str_list(c, "lemmas", file, path)) lc.lemmas.insert(l);
        lc.pattern_sources = str_list(c, "patterns", file, path);
        for (std::size_t i = 0; i < lc.pattern_sources.size(); ++i)
          if (auto re = regex(lc.pattern_sources[i], ptr(file, path + "/patterns/" + std::to_string(i))))
            lc.patterns.push_back(*re);
        if (lc.lemmas.empty() && lc.patterns.empty())
          add(ErrorCode::SchemaViolation, ptr(file, path), "lemma class needs lemmas or patterns");
        pack_.lemma_classes.emplace(id, std::move(lc));
      }
    }
  }

  bool has_lemma(const std::string& lemma) const {
    return std::any_of(pack_.lexicon.begin(), pack_.lexicon.end(), [&](const Lexeme& l) { return l.lemma == lemma; });
  }

  void check_lexicon_forms() {
    const std::string file = component_files_["lexicon"];
    for (std::size_t i = 0; i < pack_.lexicon.size(); ++i) {
      const Lexeme& lx = pack_.lexicon[i];
      const Paradigm& par = pack_.paradigms[lx.paradigm_index];
      for (std::size_t k = 0; k < par.slots.size(); ++k) {
        if (par.slots[k].rule.apply(lx.stems).empty())
          add(ErrorCode::SchemaViolation, ptr(file, "/entries/" + std::to_string(i)),
              "lexeme '" + lx.lemma + "' realizes an empty form for " + par.slots[k].features.to_string());
      }
      const std::string citation = par.slots[par.citation_slot].rule.apply(lx.stems);
      if (citation != lx.lemma)
        add(ErrorCode::SchemaViolation, ptr(file, "/entries/" + std::to_string(i)),
            "lexeme '" + lx.lemma + "' citation form generates '" + citation + "'");
    }
  }

  void check_links() {
    const std::string file = component_files_["lexicon"];
    for (std::size_t i = 0; i < pack_.lexicon.size(); ++i)
      for (const auto& [k, target] : pack_.lexicon[i].links)
        if (!has_lemma(target))
          add(ErrorCode::DanglingReference, ptr(file, "/entries/" + std::to_string(i) + "/links/" + k),
              "lexeme '" + pack_.lexicon[i].lemma + "' links to unknown lemma '" + target + "'");
  }

  // -- matchers ----------------------------------------------------------------

  std::optional<TokenMatcher> matcher(const json& m, const std::string& file, const std::string& path,
                                      std::size_t count, std::size_t self) {
    if (!m.is_object()) {
      add(ErrorCode::SchemaViolation, ptr(file, path), "matcher must be an object");
      return std::nullopt;
    }
    static const std::set<std::string> known = {"lemma",     "lemma_class",  "pos",          "features",
                                                "surface",   "chunk",        "chunk_head",   "governed_by",
                                                "governs_case", "governs_clause", "anywhere", "note"};
    for (const auto& [k, v] : m.items())
      if (!known.count(k)) add(ErrorCode::SchemaViolation, ptr(file, path + "/" + k), "unknown matcher key '" + k + "'");
    TokenMatcher tm;
    if (m.contains("lemma")) {
      auto l = str_list(m, "lemma", file, path);
      tm.lemmas = std::set<std::string>(l.begin(), l.end());
    }
    if (auto v = str(m, "lemma_class", file, path, false)) {
      tm.lemma_class = *v;
      if (!pack_.lemma_classes.count(*v))
        add(ErrorCode::DanglingReference, ptr(file, path + "/lemma_class"), "unknown lemma class '" + *v + "'");
    }
    if (m.contains("pos")) {
      auto l = str_list(m, "pos", file, path);
      for (const auto& p : l) check_pos(p, ptr(file, path + "/pos"));
      tm.pos = std::set<std::string>(l.begin(), l.end());
    }
    if (auto v = str(m, "features", file, path, false)) {
      try {
        tm.features = FeatureConstraint::parse(*v);
        check_constraint(tm.features, ptr(file, path + "/features"));
      } catch (const Error& e) {
        add(ErrorCode::SchemaViolation, ptr(file, path + "/features"), e.what());
      }
    }
    if (auto v = str(m, "surface", file, path, false)) {
      tm.surface_source = *v;
      tm.surface = regex(*v, ptr(file, path + "/surface"));
    }
    if (auto v = str(m, "chunk", file, path, false)) {
      tm.chunk = parse_chunk_kind(*v);
      if (!tm.chunk) add(ErrorCode::SchemaViolation, ptr(file, path + "/chunk"), "unknown chunk kind '" + *v + "'");
    }
    if (const auto it = m.find("chunk_head"); it != m.end()) {
      if (!it->is_boolean()) add(ErrorCode::SchemaViolation, ptr(file, path + "/chunk_head"), "expected boolean");
      else tm.chunk_head = it->get<bool>();
      if (tm.chunk_head && !tm.chunk)
        add(ErrorCode::SchemaViolation, ptr(file, path + "/chunk_head"), "chunk_head requires chunk");
    }
    if (const auto it = m.find("anywhere"); it != m.end()) {
      if (!it->is_boolean()) add(ErrorCode::SchemaViolation, ptr(file, path + "/anywhere"), "expected boolean");
      else tm.anywhere = it->get<bool>();
    }
    if (const auto it = m.find("governed_by"); it != m.end()) {
      if (!it->is_number_unsigned() || it->get<std::size_t>() >= count || it->get<std::size_t>() == self)
        add(ErrorCode::DanglingReference, ptr(file, path + "/governed_by"), "governed_by must name another matcher");
      else tm.governed_by = it->get<std::size_t>();
    }
    if (auto v = str(m, "governs_case", file, path, false)) {
      tm.governs_case = *v;
      if (!pack_.schema.has_value("Case", *v))
        add(ErrorCode::DanglingReference, ptr(file, path + "/governs_case"), "undefined case '" + *v + "'");
    }
    if (auto v = str(m, "governs_clause", file, path, false)) tm.governs_clause = *v;
    return tm;
  }

  // -- syntax ------------------------------------------------------------------

  void read_syntax(const json& doc) {
    const std::string file = component_files_["syntax"];
    SyntaxRules& sx = pack_.syntax;
    for (auto& a : str_list(doc, "abbreviations", file, "")) sx.abbreviations.insert(a);
    const auto np = doc.find("np");
    if (np == doc.end() || !np->is_object()) {
      add(ErrorCode::SchemaViolation, ptr(file, "/np"), "missing np rules");
    } else {
      for (auto& p : str_list(*np, "heads", file, "/np")) {
        check_pos(p, ptr(file, "/np/heads"));
        sx.np_heads.insert(p);
      }
      for (auto& p : str_list(*np, "modifiers", file, "/np")) {
        check_pos(p, ptr(file, "/np/modifiers"));
        sx.np_modifiers.insert(p);
      }
      sx.agreement = str_list(*np, "agreement", file, "/np");
      for (const auto& c : sx.agreement)
        if (!pack_.schema.has_category(c))
          add(ErrorCode::DanglingReference, ptr(file, "/np/agreement"), "undefined feature category '" + c + "'");
    }
    for (auto& p : str_list(doc, "adpositions", file, "")) {
      check_pos(p, ptr(file, "/adpositions"));
      sx.adpositions.insert(p);
    }
    if (const auto subj = doc.find("subject"); subj != doc.end() && subj->is_object()) {
      try {
        if (auto v = str(*subj, "features", file, "/subject", false)) sx.subject = FeatureConstraint::parse(*v);
        if (auto v = str(*subj, "finite", file, "/subject", false)) sx.finite = FeatureConstraint::parse(*v);
      } catch (const Error& e) {
        add(ErrorCode::SchemaViolation, ptr(file, "/subject"), e.what());
      }
      check_constraint(sx.subject, ptr(file, "/subject/features"));
      check_constraint(sx.finite, ptr(file, "/subject/finite"));
      sx.subject_agreement = str_list(*subj, "agreement", file, "/subject");
      for (const auto& c : sx.subject_agreement)
        if (!pack_.schema.has_category(c))
          add(ErrorCode::DanglingReference, ptr(file, "/subject/agreement"), "undefined feature category '" + c + "'");
      if (auto v = str(*subj, "default_person", file, "/subject", false)) sx.default_person = *v;
    }
    if (const json* av = array(doc, "analytic_verbs", file, "", false)) {
      for (std::size_t i = 0; i < av->size(); ++i) {
        const json& a = (*av)[i];
        const std::string path = "/analytic_verbs/" + std::to_string(i);
        AnalyticVerbPattern pat;
        if (auto v = str(a, "name", file, path, true)) pat.name = *v;
        const json* toks = array(a, "tokens", file, path);
        if (!toks) continue;
        for (std::size_t k = 0; k < toks->size(); ++k)
          if (auto tm = matcher((*toks)[k], file, path + "/tokens/" + std::to_string(k), toks->size(), k))
            pat.tokens.push_back(std::move(*tm));
        const auto head = a.find("head");
        if (head == a.end() || !head->is_number_unsigned() || head->get<std::size_t>() >= toks->size())
          add(ErrorCode::SchemaViolation, ptr(file, path + "/head"), "head must index a token");
        else pat.head = head->get<std::size_t>();
        if (pat.tokens.size() < 2)
          add(ErrorCode::SchemaViolation, ptr(file, path + "/tokens"), "analytic verb needs at least two tokens");
        sx.analytic_verbs.push_back(std::move(pat));
      }
    }
  }

  // -- hierarchy ---------------------------------------------------------------

  void read_hierarchy(const json& doc) {
    const std::string file = component_files_["hierarchy"];
    FeatureHierarchy& h = pack_.hierarchy;
    const auto order = doc.find("order");
    if (order == doc.end() || !order->is_object()) {
      add(ErrorCode::SchemaViolation, ptr(file, "/order"), "missing order object");
    } else {
      for (const auto& [pos, cats] : order->items()) {
        check_pos(pos, ptr(file, "/order/" + pos));
        auto list = str_list(*order, pos.c_str(), file, "/order");
        std::set<std::string> seen;
        for (const auto& c : list) {
          if (!pack_.schema.has_category(c))
            add(ErrorCode::DanglingReference, ptr(file, "/order/" + pos), "undefined feature category '" + c + "'");
          if (!seen.insert(c).second)
            add(ErrorCode::SchemaViolation, ptr(file, "/order/" + pos), "duplicate category '" + c + "'");
        }
        h.order[pos] = std::move(list);
      }
    }
    if (const auto labels = doc.find("labels"); labels != doc.end() && labels->is_object()) {
      for (const auto& [k, v] : labels->items()) {
        if (!pack_.schema.has_category(k))
          add(ErrorCode::DanglingReference, ptr(file, "/labels/" + k), "undefined feature category '" + k + "'");
        if (v.is_string()) h.category_labels[k] = v.get<std::string>();
      }
    }
    if (const auto values = doc.find("values"); values != doc.end() && values->is_object()) {
      for (const auto& [k, v] : values->items()) {
        const auto eq = k.find('=');
        if (eq == std::string::npos || !pack_.schema.has_value(k.substr(0, eq), k.substr(eq + 1)))
          add(ErrorCode::DanglingReference, ptr(file, "/values/" + k), "undefined feature value '" + k + "'");
        if (v.is_string()) h.value_labels[k] = v.get<std::string>();
      }
    }
    if (const auto t = doc.find("templates"); t != doc.end() && t->is_object()) {
      const std::string path = "/templates";
      if (auto v = str(*t, "category", file, path, false)) h.category_template = *v;
      if (auto v = str(*t, "values", file, path, false)) h.values_template = *v;
      if (auto v = str(*t, "paraphrase", file, path, false)) h.paraphrase_template = *v;
      if (auto v = str(*t, "citation", file, path, false)) h.citation_template = *v;
      if (auto v = str(*t, "separator", file, path, false)) h.separator = *v;
      if (auto v = str(*t, "last_separator", file, path, false)) h.last_separator = *v;
    }
  }

  // -- government ---------------------------------------------------------------

  void read_government(const json& doc) {
    const std::string file = component_files_["government"];
    const json* list = array(doc, "patterns", file, "");
    if (!list) return;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& g = (*list)[i];
      const std::string path = "/patterns/" + std::to_string(i);
      GovernmentPattern gp;
      if (auto v = str(g, "governor", file, path, true)) gp.governor = *v;
      if (auto v = str(g, "pos", file, path, true)) {
        gp.governor_pos = *v;
        check_pos(*v, ptr(file, path + "/pos"));
      }
      gp.case_value = str(g, "case", file, path, false);
      gp.preposition = str(g, "preposition", file, path, false);
      gp.clause_marker = str(g, "clause", file, path, false);
      if (auto v = str(g, "role", file, path, false)) gp.role = *v;
      if (const auto it = g.find("direction_free"); it != g.end() && it->is_boolean()) gp.direction_free = it->get<bool>();
      if (!gp.case_value && !gp.clause_marker)
        add(ErrorCode::SchemaViolation, ptr(file, path), "pattern needs a case or a clause marker");
      if (gp.case_value && !pack_.schema.has_value("Case", *gp.case_value))
        add(ErrorCode::DanglingReference, ptr(file, path + "/case"), "undefined case '" + *gp.case_value + "'");
      if (!gp.governor.empty() && gp.governor[0] == '@') {
        if (!pack_.lemma_classes.count(gp.governor.substr(1)))
          add(ErrorCode::DanglingReference, ptr(file, path + "/governor"), "unknown lemma class '" + gp.governor + "'");
      } else if (!has_lemma(gp.governor)) {
        add(ErrorCode::DanglingReference, ptr(file, path + "/governor"), "governor lemma '" + gp.governor + "' not in lexicon");
      }
      if (gp.preposition && !has_lemma(*gp.preposition))
        add(ErrorCode::DanglingReference, ptr(file, path + "/preposition"), "preposition '" + *gp.preposition + "' not in lexicon");
      pack_.government.push_back(std::move(gp));
    }
  }

  // -- constructs and recipes ----------------------------------------------------

  void read_recipes(const json& doc, const std::string& file) {
    const json* list = array(doc, "recipes", file, "", false);
    if (!list) return;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& r = (*list)[i];
      const std::string path = "/recipes/" + std::to_string(i);
      DistractorRecipe rec;
      if (auto v = str(r, "id", file, path, true)) rec.id = *v;
      const auto strategy = str(r, "strategy", file, path, true).value_or("");
      if (strategy == "FeatureVariation") {
        rec.strategy = DistractorStrategy::FeatureVariation;
        rec.category = str(r, "category", file, path, true).value_or("");
        rec.values = str_list(r, "values", file, path);
        if (!pack_.schema.has_category(rec.category))
          add(ErrorCode::DanglingReference, ptr(file, path + "/category"), "undefined feature category '" + rec.category + "'");
        for (const auto& v : rec.values)
          if (!pack_.schema.has_value(rec.category, v))
            add(ErrorCode::DanglingReference, ptr(file, path + "/values"), "undefined value '" + v + "' for '" + rec.category + "'");
        if (rec.values.empty()) add(ErrorCode::SchemaViolation, ptr(file, path + "/values"), "value list is empty");
      } else if (strategy == "LemmaPairSwap") {
        rec.strategy = DistractorStrategy::LemmaPairSwap;
        if (auto v = str(r, "link", file, path, false)) rec.link = *v;
      } else if (strategy == "OrthographyVariants") {
        rec.strategy = DistractorStrategy::OrthographyVariants;
        const json* rules = array(r, "rules", file, path);
        if (rules) {
          for (std::size_t k = 0; k < rules->size(); ++k) {
            const std::string rpath = path + "/rules/" + std::to_string(k);
            auto pat = str((*rules)[k], "pattern", file, rpath, true);
            auto rep = str((*rules)[k], "replace", file, rpath, true);
            if (!pat || !rep) continue;
            if (auto re = regex(*pat, ptr(file, rpath + "/pattern"))) rec.rules.push_back({*pat, *re, *rep});
          }
          if (rec.rules.empty()) add(ErrorCode::SchemaViolation, ptr(file, path + "/rules"), "no rewrite rules");
        }
      } else {
        add(ErrorCode::SchemaViolation, ptr(file, path + "/strategy"), "unknown distractor strategy '" + strategy + "'");
      }
      if (const auto c = r.find("count"); c != r.end()) {
        if (!c->is_number_unsigned() || c->get<std::size_t>() < 2 || c->get<std::size_t>() > 5)
          add(ErrorCode::SchemaViolation, ptr(file, path + "/count"), "count must be within 2..5");
        else rec.count = c->get<std::size_t>();
      }
      if (pack_.recipes.count(rec.id)) add(ErrorCode::SchemaViolation, ptr(file, path + "/id"), "duplicate recipe id");
      pack_.recipes.emplace(rec.id, std::move(rec));
    }
  }

  void read_constructs(const json& doc) {
    const std::string file = component_files_["constructs"];
    read_recipes(doc, file);
    const json* list = array(doc, "constructs", file, "");
    if (!list) return;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& c = (*list)[i];
      const std::string path = "/constructs/" + std::to_string(i);
      ConstructDef def;
      def.order = i;
      if (auto v = str(c, "id", file, path, true)) def.id = *v;
      if (!ids.insert(def.id).second) add(ErrorCode::SchemaViolation, ptr(file, path + "/id"), "duplicate construct id '" + def.id + "'");
      if (auto v = str(c, "name", file, path, true)) def.name = *v;
      const auto kind = str(c, "kind", file, path, true);
      if (kind) {
        if (auto k = parse_construct_kind(*kind)) def.kind = *k;
        else add(ErrorCode::SchemaViolation, ptr(file, path + "/kind"), "unknown construct kind '" + *kind + "'");
      }
      const json* ms = array(c, "matchers", file, path);
      if (ms) {
        if (ms->empty()) add(ErrorCode::SchemaViolation, ptr(file, path + "/matchers"), "construct needs at least one matcher");
        for (std::size_t k = 0; k < ms->size(); ++k)
          if (auto tm = matcher((*ms)[k], file, path + "/matchers/" + std::to_string(k), ms->size(), k))
            def.matchers.push_back(std::move(*tm));
      }
      if (const auto cand = c.find("candidates"); cand != c.end() && cand->is_array()) {
        for (const auto& x : *cand) {
          if (!x.is_number_unsigned() || x.get<std::size_t>() >= def.matchers.size())
            add(ErrorCode::DanglingReference, ptr(file, path + "/candidates"), "candidate marker points at no matcher");
          else def.candidates.push_back(x.get<std::size_t>());
        }
      } else {
        add(ErrorCode::SchemaViolation, ptr(file, path + "/candidates"), "missing candidates array");
      }
      if (auto v = str(c, "cefr", file, path, false)) {
        if (std::find(std::begin(kCefrLevels), std::end(kCefrLevels), *v) == std::end(kCefrLevels))
          add(ErrorCode::SchemaViolation, ptr(file, path + "/cefr"), "CEFR level must be A1..C2");
        def.cefr = *v;
      }
      if (auto v = str(c, "recipe", file, path, false)) {
        def.recipe = *v;
        if (!pack_.recipes.count(*v))
          add(ErrorCode::DanglingReference, ptr(file, path + "/recipe"), "unknown distractor recipe '" + *v + "'");
      }
      if (auto v = str(c, "hint_lemma", file, path, false)) def.hint_lemma = *v;
      if (const auto fb = c.find("feedback"); fb != c.end() && fb->is_object()) {
        if (auto v = str(*fb, "context", file, path + "/feedback", false)) def.feedback.context = *v;
        if (auto v = str(*fb, "final", file, path + "/feedback", false)) def.feedback.final_hint = *v;
      }
      if (const auto pp = c.find("paraphrase"); pp != c.end()) read_paraphrase(*pp, def, file, path + "/paraphrase");
      check_kind(def, file, path);
      pack_.constructs.push_back(std::move(def));
    }
  }

  void read_paraphrase(const json& pp, ConstructDef& def, const std::string& file, const std::string& path) {
    const json* parts = array(pp, "parts", file, path);
    if (!parts) return;
    ParaphraseTemplate tpl;
    for (std::size_t k = 0; k < parts->size(); ++k) {
      const json& p = (*parts)[k];
      const std::string ppath = path + "/parts/" + std::to_string(k);
      ParaphrasePart part;
      if (auto t = str(p, "text", file, ppath, false)) {
        part.text = *t;
        tpl.parts.push_back(std::move(part));
        continue;
      }
      const auto slot = p.find("slot");
      if (slot == p.end() || !slot->is_number_unsigned() || slot->get<std::size_t>() >= def.matchers.size()) {
        add(ErrorCode::DanglingReference, ptr(file, ppath + "/slot"), "paraphrase slot must reference a matcher");
        continue;
      }
      part.slot = slot->get<std::size_t>();
      std::optional<std::string> feats = str(p, "set", file, ppath, false);
      if (auto rep = str(p, "replace", file, ppath, false)) {
        feats = rep;
        part.replace = true;
      }
      if (feats && !feats->empty()) {
        std::stringstream ss(*feats);
        std::string item;
        while (std::getline(ss, item, '|')) {
          const auto eq = item.find('=');
          if (eq == std::string::npos) {
            add(ErrorCode::SchemaViolation, ptr(file, ppath), "malformed feature '" + item + "'");
            continue;
          }
          const std::string cat = item.substr(0, eq), val = item.substr(eq + 1);
          if (!pack_.schema.has_category(cat)) {
            add(ErrorCode::DanglingReference, ptr(file, ppath), "undefined feature category '" + cat + "'");
          } else if (!val.empty() && val[0] == '@') {
            const auto dot = val.find('.');
            std::size_t ref = 0;
            bool ok = dot != std::string::npos && dot > 1;
            if (ok) {
              try {
                ref = std::stoul(val.substr(1, dot - 1));
              } catch (...) {
                ok = false;
              }
            }
            if (!ok || ref >= def.matchers.size() || !pack_.schema.has_category(val.substr(dot + 1)))
              add(ErrorCode::DanglingReference, ptr(file, ppath), "bad feature reference '" + val + "'");
          } else if (!pack_.schema.has_value(cat, val)) {
            add(ErrorCode::DanglingReference, ptr(file, ppath), "undefined value '" + val + "' for feature '" + cat + "'");
          }
          part.features[cat] = val;
        }
      }
      tpl.parts.push_back(std::move(part));
    }
    def.paraphrase = std::move(tpl);
  }

  void check_kind(const ConstructDef& def, const std::string& file, const std::string& path) {
    switch (def.kind) {
      case ConstructKind::Orthography:
        for (const auto& m : def.matchers)
          if (!m.surface || m.needs_analysis())
            add(ErrorCode::SchemaViolation, ptr(file, path + "/matchers"), "orthography matchers constrain surfaces only");
        break;
      case ConstructKind::Government:
        if (std::none_of(def.matchers.begin(), def.matchers.end(), [](const TokenMatcher& m) { return m.governed_by.has_value(); }))
          add(ErrorCode::SchemaViolation, ptr(file, path + "/matchers"), "government construct needs a governed_by matcher");
        break;
      case ConstructKind::LemmaClass:
        if (std::none_of(def.matchers.begin(), def.matchers.end(), [](const TokenMatcher& m) { return m.lemma_class.has_value(); }))
          add(ErrorCode::SchemaViolation, ptr(file, path + "/matchers"), "lemma-class construct needs a lemma_class matcher");
        break;
      default:
        break;
    }
  }

  // -- gold --------------------------------------------------------------------

  void read_gold() {
    json doc;
    if (!read_json(*gold_file_, doc)) return;
    const std::string file = *gold_file_;
    const json* list = array(doc, "sentences", file, "");
    if (!list) return;
    std::set<std::string> construct_ids;
    for (const auto& c : pack_.constructs) construct_ids.insert(c.id);
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& s = (*list)[i];
      const std::string path = "/sentences/" + std::to_string(i);
      GoldSentence g;
      if (auto v = str(s, "id", file, path, true)) g.id = *v;
      if (auto v = str(s, "text", file, path, true)) g.text = *v;
      if (const json* inst = array(s, "instances", file, path)) {
        for (std::size_t k = 0; k < inst->size(); ++k) {
          const json& x = (*inst)[k];
          const std::string ipath = path + "/instances/" + std::to_string(k);
          GoldInstance gi;
          if (auto v = str(x, "construct", file, ipath, true)) gi.construct = *v;
          if (!construct_ids.count(gi.construct))
            add(ErrorCode::DanglingReference, ptr(file, ipath + "/construct"), "unknown construct '" + gi.construct + "'");
          try {
            gi.tokens = x.at("tokens").get<std::vector<std::size_t>>();
            gi.candidates = x.at("candidates").get<std::vector<std::size_t>>();
            gi.surfaces = x.value("surfaces", std::vector<std::string>{});
          } catch (const json::exception&) {
            add(ErrorCode::SchemaViolation, ptr(file, ipath), "tokens/candidates must be index arrays");
          }
          g.instances.push_back(std::move(gi));
        }
      }
      pack_.gold.push_back(std::move(g));
    }
  }

  fs::path dir_;
  LanguagePack pack_;
  std::vector<Violation> violations_;
  std::map<std::string, std::string> component_files_;
  std::optional<std::string> gold_file_;
};

}  // namespace

std::vector<Violation> validate_pack(const fs::path& dir) {
  PackReader reader(dir);
  return reader.run();
}

LanguagePack load_pack(const fs::path& dir) {
  PackReader reader(dir);
  const auto violations = reader.run();
  if (!violations.empty()) {
    const Violation& first = violations.front();
    std::string msg = first.pointer + ": " + first.message;
    if (violations.size() > 1) msg += " (+" + std::to_string(violations.size() - 1) + " more)";
    fail(first.code, msg);
  }
  return reader.take();
}

}  // namespace construe
