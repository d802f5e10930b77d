#include "construe/construe.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "construe/constructs.hpp"
#include "construe/learner_model.hpp"
#include "construe/service.hpp"
#include "json_io.hpp"

using construe::Error;
using construe::ErrorCode;
using construe::io::json;

struct cns_pack {
  construe::LanguagePack pack;
};

struct cns_service {
  std::unique_ptr<construe::Service> service;
};

namespace {

thread_local std::string last_error;

cns_status set_error(cns_status status, const std::string& message) {
  last_error = message;
  return status;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs `fn`, translating exceptions into status codes and the thread-local message.
template <class F>
cns_status guarded(F&& fn) {
  try {
    last_error.clear();
    fn();
    return CNS_OK;
  } catch (const Error& e) {
    return set_error(static_cast<cns_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(CNS_BAD_REQUEST, e.what());
  } catch (const std::exception& e) {
    return set_error(CNS_INTERNAL, e.what());
  }
}

std::map<std::string, std::string> parse_query(const char* query) {
  std::map<std::string, std::string> out;
  if (!query) return out;
  const auto decode = [](std::string_view s) {
    std::string r;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '+') {
        r += ' ';
      } else if (s[i] == '%' && i + 2 < s.size()) {
        r += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
        i += 2;
      } else {
        r += s[i];
      }
    }
    return r;
  };
  std::string_view q(query);
  while (!q.empty()) {
    const auto amp = q.find('&');
    const std::string_view part = q.substr(0, amp);
    const auto eq = part.find('=');
    if (!part.empty()) out[decode(part.substr(0, eq))] = eq == std::string_view::npos ? "" : decode(part.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

}  // namespace

extern "C" {

const char* cns_version(void) { return "1.0.0"; }

const char* cns_status_name(cns_status status) {
  if (status == CNS_INVALID_ARGUMENT) return "InvalidArgument";
  if (status < CNS_OK || status > CNS_INTERNAL) return "Unknown";
  static thread_local std::string name;
  name = std::string(construe::error_code_name(static_cast<ErrorCode>(status)));
  return name.c_str();
}

const char* cns_last_error(void) { return last_error.c_str(); }

void cns_string_free(char* s) { std::free(s); }

cns_status cns_pack_validate(const char* dir, char** out) {
  if (!dir || !out) return set_error(CNS_INVALID_ARGUMENT, "dir and out are required");
  return guarded([&] { *out = dup(construe::io::violations_json(construe::validate_pack(dir)).dump(2)); });
}

cns_status cns_pack_open(const char* dir, cns_pack** out) {
  if (!dir || !out) return set_error(CNS_INVALID_ARGUMENT, "dir and out are required");
  *out = nullptr;
  return guarded([&] { *out = new cns_pack{construe::load_pack(dir)}; });
}

void cns_pack_close(cns_pack* pack) { delete pack; }

const char* cns_pack_language(const cns_pack* pack) { return pack ? pack->pack.language.c_str() : ""; }

cns_status cns_annotate(const cns_pack* pack, const char* story_id, const char* text, char** out) {
  if (!pack || !text || !out) return set_error(CNS_INVALID_ARGUMENT, "pack, text and out are required");
  return guarded([&] {
    const auto story = construe::annotate(story_id ? story_id : "story", text, pack->pack);
    const auto instances = construe::detect_constructs(story, pack->pack);
    *out = dup(construe::io::annotation_json(story, instances, pack->pack).dump(2));
  });
}

cns_status cns_detect_gold(const cns_pack* pack, const char* gold_path, char** out) {
  if (!pack || !out) return set_error(CNS_INVALID_ARGUMENT, "pack and out are required");
  return guarded([&] {
    std::vector<construe::GoldSentence> sentences;
    if (gold_path) {
      std::ifstream in(gold_path, std::ios::binary);
      if (!in) construe::fail(ErrorCode::MissingFile, std::string("cannot read ") + gold_path);
      const json doc = json::parse(in);
      for (const auto& s : doc.at("sentences")) sentences.push_back({s.at("id"), s.at("text"), {}});
    } else {
      sentences = pack->pack.gold;
    }
    *out = dup(construe::io::detect_gold(sentences, pack->pack).dump(2));
  });
}

cns_status cns_simulate(const char* spec_json, const char* events_path, char** out) {
  if (!out) return set_error(CNS_INVALID_ARGUMENT, "out is required");
  return guarded([&] {
    construe::SimulationSpec spec;
    if (spec_json && *spec_json) {
      const json j = json::parse(spec_json);
      spec.learners = j.value("learners", spec.learners);
      spec.constructs = j.value("constructs", spec.constructs);
      spec.answers = j.value("answers", spec.answers);
      spec.theta_sd = j.value("theta_sd", spec.theta_sd);
      spec.b_sd = j.value("b_sd", spec.b_sd);
      spec.seed = j.value("seed", spec.seed);
    }
    std::optional<std::filesystem::path> path;
    if (events_path) path = events_path;
    const auto r = construe::simulate(spec, path);
    json result{{"learners", spec.learners},
                {"constructs", spec.constructs},
                {"answers", spec.answers},
                {"seed", spec.seed},
                {"events", r.events},
                {"iterations", r.state.iterations},
                {"converged", r.state.converged},
                {"log_likelihood", r.state.log_likelihood},
                {"r_theta", r.r_theta},
                {"r_b", r.r_b}};
    *out = dup(result.dump(2));
  });
}

cns_status cns_service_create(const char* config_json, cns_service** out) {
  if (!config_json || !out) return set_error(CNS_INVALID_ARGUMENT, "config_json and out are required");
  *out = nullptr;
  return guarded([&] {
    const json j = json::parse(config_json);
    construe::ServiceConfig config;
    for (const auto& [lang, dir] : j.at("packs").items()) config.packs[lang] = dir.get<std::string>();
    if (j.contains("data_dir") && j["data_dir"].is_string()) config.data_dir = j["data_dir"].get<std::string>();
    config.default_density = j.value("default_density", config.default_density);
    *out = new cns_service{std::make_unique<construe::Service>(std::move(config))};
  });
}

void cns_service_destroy(cns_service* service) { delete service; }

cns_status cns_service_handle(cns_service* service, const char* method, const char* path, const char* query,
                              const char* token, const char* body, int* http_status, char** out) {
  if (!service || !method || !path || !http_status || !out)
    return set_error(CNS_INVALID_ARGUMENT, "service, method, path, http_status and out are required");
  return guarded([&] {
    construe::ApiRequest req;
    req.method = method;
    req.path = path;
    req.query = parse_query(query);
    req.token = token ? token : "";
    req.body = body ? body : "";
    const auto res = service->service->handle(req);
    *http_status = res.status;
    *out = dup(res.body);
  });
}

cns_status cns_service_serve(cns_service* service, const char* host, int port, void (*on_ready)(int, void*),
                             void* user) {
  if (!service || !host) return set_error(CNS_INVALID_ARGUMENT, "service and host are required");
  bool ok = false;
  const cns_status st = guarded([&] {
    ok = service->service->serve(host, port, [&](int bound) {
      if (on_ready) on_ready(bound, user);
    });
  });
  if (st != CNS_OK) return st;
  if (!ok) return set_error(CNS_IO, "cannot bind " + std::string(host) + ":" + std::to_string(port));
  return CNS_OK;
}

void cns_service_stop(cns_service* service) {
  if (service) service->service->stop();
}

}  // extern "C"
