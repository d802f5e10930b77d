#include <doctest.h>

#include <json.hpp>

#include "construe/learner_model.hpp"
#include "construe/service.hpp"
#include "support.hpp"

using namespace construe;
using json = nlohmann::json;

namespace {

const char* kStory = "Kokki lisää keittoon suolaa. Maija kertoi vanhempien asuvan kaupungissa.";

struct Reply {
  int status;
  json body;
};

class Api {
 public:
  explicit Api(std::filesystem::path data = {}) : svc_(config(std::move(data))) {}

  static ServiceConfig config(std::filesystem::path data) {
    ServiceConfig c;
    for (const std::string lang : {"fi", "ru", "de"}) c.packs[lang] = test::pack_dir(lang);
    c.data_dir = std::move(data);
    return c;
  }

  Reply call(const std::string& method, const std::string& path, const std::string& token = "", const json& body = {},
             std::map<std::string, std::string> query = {}) {
    ApiRequest r;
    r.method = method;
    r.path = "/api/v1" + path;
    r.token = token;
    r.query = std::move(query);
    if (!body.is_null()) r.body = body.dump();
    const ApiResponse out = svc_.handle(r);
    return {out.status, json::parse(out.body)};
  }

  // Returns the token of a new user.
  std::string user(const std::string& name, const std::string& role = "learner") {
    const auto r = call("POST", "/users", "", {{"name", name}, {"role", role}});
    REQUIRE(r.status == 201);
    ids_[r.body["token"]] = r.body["id"];
    return r.body["token"];
  }
  std::string id(const std::string& token) { return ids_.at(token); }

  std::string story(const std::string& token, const std::string& lang = "fi", const std::string& text = kStory) {
    const auto r = call("POST", "/stories", token, {{"language", lang}, {"text", text}, {"title", "t"}});
    REQUIRE(r.status == 201);
    return r.body["id"];
  }

 private:
  Service svc_;
  std::map<std::string, std::string> ids_;
};

// The correct answer for an exercise, recomputed from the story text.
std::string answer_for(const json& ex, const std::string& lang = "fi", const std::string& text = kStory) {
  for (const auto& c : test::run(lang, text).candidates)
    if (c.first == ex["first"] && c.last == ex["last"]) return c.answer;
  FAIL("no candidate for exercise");
  return {};
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("authentication and input errors") {
  Api api;
  CHECK(api.call("GET", "/health").status == 200);
  CHECK(api.call("GET", "/me").status == 401);
  CHECK(api.call("GET", "/stories", "bogus").status == 401);
  const auto t = api.user("ann");
  CHECK(api.call("GET", "/me", t).body["name"] == "ann");

  const auto unsupported = api.call("POST", "/stories", t, {{"language", "xx"}, {"text", "Hei."}});
  CHECK(unsupported.status == 400);
  CHECK(unsupported.body["error"]["code"] == "UnsupportedLanguage");
  const auto empty = api.call("POST", "/stories", t, {{"language", "fi"}, {"text", "  \n "}});
  CHECK(empty.status == 400);
  CHECK(empty.body["error"]["code"] == "EmptyText");
  CHECK(api.call("GET", "/stories/s99", t).status == 404);
  CHECK(api.call("GET", "/nowhere", t).status == 404);
  CHECK(api.call("POST", "/users", "", {{"name", "x"}, {"role", "admin"}}).status == 400);

  const auto s = api.story(t, "fi", "Xyzzy plugh.");
  const auto none = api.call("POST", "/stories/" + s + "/sessions", t);
  CHECK(none.status == 409);
  CHECK(none.body["error"]["code"] == "NoCandidates");
}

TEST_CASE("privacy: private stories") {
  Api api;
  const auto owner = api.user("owner"), other = api.user("other"), teacher = api.user("teacher", "teacher");
  const auto s = api.story(owner);
  CHECK(api.call("GET", "/stories/" + s, owner).status == 200);
  for (const auto& tok : {other, teacher}) {
    CHECK(api.call("GET", "/stories/" + s, tok).status == 403);
    CHECK(api.call("GET", "/stories/" + s + "/preview", tok).status == 403);
    CHECK(api.call("POST", "/stories/" + s + "/sessions", tok).status == 403);
    CHECK(api.call("PUT", "/stories/" + s + "/visibility", tok, {{"visibility", "public"}}).status == 403);
    CHECK(api.call("GET", "/stories", tok).body["stories"].empty());
  }
  // A teacher cannot share a story they cannot read.
  const auto g = api.call("POST", "/groups", teacher, {{"name", "class"}}).body["id"].get<std::string>();
  CHECK(api.call("POST", "/groups/" + g + "/stories", teacher, {{"story", s}}).status == 403);

  // Made public by its owner, it becomes readable but stays owned.
  CHECK(api.call("PUT", "/stories/" + s + "/visibility", owner, {{"visibility", "public"}}).status == 200);
  CHECK(api.call("GET", "/stories/" + s + "/preview", other).status == 200);
  CHECK(api.call("PUT", "/stories/" + s + "/visibility", other, {{"visibility", "private"}}).status == 403);
  CHECK(api.call("PUT", "/stories/" + s + "/visibility", owner, {{"visibility", "private"}}).status == 200);
  CHECK(api.call("GET", "/stories/" + s, other).status == 403);
}

TEST_CASE("privacy: sessions and placement belong to their learner") {
  Api api;
  const auto a = api.user("a"), b = api.user("b");
  const auto s = api.story(a);
  const auto session = api.call("POST", "/stories/" + s + "/sessions", a, {}, {{"seed", "1"}});
  REQUIRE(session.status == 201);
  const std::string sid = session.body["id"];
  const std::string ex = session.body["exercises"][0]["id"];
  CHECK(api.call("GET", "/sessions/" + sid, b).status == 403);
  CHECK(api.call("POST", "/sessions/" + sid + "/exercises/" + ex + "/answer", b, {{"answer", "x"}}).status == 403);
  CHECK(api.call("POST", "/sessions/" + sid + "/exercises/" + ex + "/hint", b).status == 403);

  const auto placement = api.call("POST", "/placement", a, {{"language", "fi"}});
  REQUIRE(placement.status == 201);
  const std::string pid = placement.body["id"];
  CHECK(api.call("GET", "/placement/" + pid, b).status == 403);
  CHECK(api.call("POST", "/placement/" + pid + "/answer", b, {{"answer", "x"}}).status == 403);
  CHECK(api.call("GET", "/placement/" + pid, a).status == 200);
}

TEST_CASE("privacy: groups and member progress") {
  Api api;
  const auto teacher = api.user("t", "teacher"), rival = api.user("r", "teacher");
  const auto in = api.user("in"), invited = api.user("invited"), out = api.user("out");
  CHECK(api.call("POST", "/groups", in, {{"name", "x"}}).status == 403);
  const std::string g = api.call("POST", "/groups", teacher, {{"name", "class"}}).body["id"];

  for (const auto& learner : {in, invited})
    CHECK(api.call("POST", "/groups/" + g + "/invitations", teacher, {{"learner", api.id(learner)}}).status == 201);
  CHECK(api.call("POST", "/groups/" + g + "/invitations", rival, {{"learner", api.id(out)}}).status == 403);
  CHECK(api.call("POST", "/groups/" + g + "/accept", out).status == 403);
  CHECK(api.call("POST", "/groups/" + g + "/accept", in).status == 200);

  const std::map<std::string, std::string> fi{{"language", "fi"}};
  const auto member = [&](const std::string& tok) { return "/groups/" + g + "/members/" + api.id(tok) + "/progress"; };
  CHECK(api.call("GET", member(in), teacher, {}, fi).status == 200);
  CHECK(api.call("GET", member(invited), teacher, {}, fi).status == 403);
  CHECK(api.call("GET", member(out), teacher, {}, fi).status == 403);
  CHECK(api.call("GET", member(in), rival, {}, fi).status == 403);
  CHECK(api.call("GET", member(in), in, {}, fi).status == 403);
  CHECK(api.call("GET", "/groups/" + g + "/progress", rival, {}, fi).status == 403);
  const auto all = api.call("GET", "/groups/" + g + "/progress", teacher, {}, fi);
  REQUIRE(all.status == 200);
  REQUIRE(all.body["members"].size() == 1);
  CHECK(all.body["members"][0]["learner"] == api.id(in));

  // Shared stories are readable by the teacher and accepted members only.
  const auto s = api.story(teacher);
  CHECK(api.call("POST", "/groups/" + g + "/stories", rival, {{"story", s}}).status == 403);
  CHECK(api.call("POST", "/groups/" + g + "/stories", teacher, {{"story", s}}).status == 201);
  CHECK(api.call("GET", "/stories/" + s + "/preview", in).status == 200);
  CHECK(api.call("POST", "/stories/" + s + "/sessions", in).status == 201);
  for (const auto& tok : {invited, out, rival}) {
    CHECK(api.call("GET", "/stories/" + s, tok).status == 403);
    CHECK(api.call("GET", "/stories/" + s + "/preview", tok).status == 403);
  }
}

TEST_CASE("practice session flow") {
  Api api;
  const auto t = api.user("ann");
  const auto s = api.story(t);
  const auto created = api.call("POST", "/stories/" + s + "/sessions", t, {}, {{"seed", "4"}, {"density", "5"}});
  REQUIRE(created.status == 201);
  const json& session = created.body;
  const std::string sid = session["id"];
  REQUIRE_FALSE(session["exercises"].empty());
  const json ex = session["exercises"][0];
  const std::string path = "/sessions/" + sid + "/exercises/" + ex["id"].get<std::string>();

  // Exercise spans are blanked, the rest of the text is shown.
  for (const auto& tok : session["tokens"]) {
    bool inside = false;
    for (const auto& e : session["exercises"])
      inside = inside || (tok["index"] >= e["first"] && tok["index"] <= e["last"]);
    CHECK(tok["surface"].is_null() == inside);
  }
  CHECK(ex["answer"].is_null());
  CHECK(ex["state"]["hearts"] == 5);

  const auto wrong = api.call("POST", path + "/answer", t, {{"answer", "qwerty"}});
  REQUIRE(wrong.status == 200);
  CHECK_FALSE(wrong.body["correct"].get<bool>());
  CHECK(wrong.body["hearts"] == 4);
  CHECK(wrong.body["answer"].is_null());
  const auto hint = api.call("POST", path + "/hint", t);
  REQUIRE(hint.status == 200);
  CHECK(hint.body["hearts"] == 3);

  const auto mid = api.call("GET", "/sessions/" + sid, t).body;
  CHECK(mid["exercises"][0]["answer"].is_null());
  CHECK(mid["exercises"][0]["state"]["answers"].size() == 1);

  const std::string right = answer_for(ex);
  const auto ok = api.call("POST", path + "/answer", t, {{"answer", right}});
  REQUIRE(ok.status == 200);
  CHECK(ok.body["correct"].get<bool>());
  CHECK(ok.body["finished"].get<bool>());
  const auto done = api.call("GET", "/sessions/" + sid, t).body;
  CHECK(done["exercises"][0]["answer"] == right);
  CHECK(done["tokens"][ex["first"].get<std::size_t>()]["surface"].is_string());

  const auto again = api.call("POST", path + "/answer", t, {{"answer", right}});
  CHECK(again.status == 409);
  CHECK(again.body["error"]["code"] == "OutOfOrderAttempt");
  CHECK(api.call("POST", "/sessions/" + sid + "/exercises/nope/answer", t, {{"answer", "x"}}).status == 404);

  // Progress reflects the finished exercise.
  const auto progress = api.call("GET", "/progress", t, {}, {{"language", "fi"}});
  REQUIRE(progress.status == 200);
  CHECK_FALSE(progress.body["constructs"].empty());
  CHECK(progress.body["theta"].is_number());

  // A new session for the same story retires the old one.
  CHECK(api.call("POST", "/stories/" + s + "/sessions", t).status == 201);
  CHECK(api.call("GET", "/sessions/" + sid, t).body["active"] == false);
  CHECK(api.call("POST", "/sessions/" + sid + "/exercises/" + session["exercises"].back()["id"].get<std::string>() +
                         "/hint", t).status == 409);
}

TEST_CASE("sessions are reproducible from their seed") {
  Api a, b;
  const auto ta = a.user("x"), tb = b.user("x");
  const auto sa = a.story(ta), sb = b.story(tb);
  const auto x = a.call("POST", "/stories/" + sa + "/sessions", ta, {}, {{"seed", "77"}}).body;
  const auto y = b.call("POST", "/stories/" + sb + "/sessions", tb, {}, {{"seed", "77"}}).body;
  CHECK(x["exercises"] == y["exercises"]);
  CHECK(x["tokens"] == y["tokens"]);
}

TEST_CASE("replaying the data directory restores every view") {
  const auto dir = fresh_dir("construe_service_replay");
  json session, progress, groups, stories, me;
  std::string t, teacher, sid, g;
  {
    Api api(dir);
    t = api.user("ann");
    teacher = api.user("tea", "teacher");
    g = api.call("POST", "/groups", teacher, {{"name", "c"}}).body["id"];
    api.call("POST", "/groups/" + g + "/invitations", teacher, {{"learner", api.id(t)}});
    api.call("POST", "/groups/" + g + "/accept", t);
    api.call("PUT", "/me/level", t, {{"language", "fi"}, {"cefr", "B1"}});
    const auto s = api.story(t);
    sid = api.call("POST", "/stories/" + s + "/sessions", t, {}, {{"seed", "9"}}).body["id"];
    const auto view = api.call("GET", "/sessions/" + sid, t).body;
    for (const auto& ex : view["exercises"]) {
      const std::string path = "/sessions/" + sid + "/exercises/" + ex["id"].get<std::string>();
      api.call("POST", path + "/answer", t, {{"answer", "qwerty"}});
      api.call("POST", path + "/hint", t);
      api.call("POST", path + "/answer", t, {{"answer", answer_for(ex)}});
    }
    session = api.call("GET", "/sessions/" + sid, t).body;
    progress = api.call("GET", "/groups/" + g + "/members/" + api.id(t) + "/progress", teacher, {},
                        {{"language", "fi"}}).body;
    groups = api.call("GET", "/groups", teacher).body;
    stories = api.call("GET", "/stories", t).body;
    me = api.call("GET", "/me", t).body;
  }
  Api replayed(dir);
  CHECK(replayed.call("GET", "/sessions/" + sid, t).body == session);
  CHECK(replayed.call("GET", "/groups/" + g + "/members/u1/progress", teacher, {}, {{"language", "fi"}}).body ==
        progress);
  CHECK(replayed.call("GET", "/groups", teacher).body == groups);
  CHECK(replayed.call("GET", "/stories", t).body == stories);
  CHECK(replayed.call("GET", "/me", t).body == me);
  std::filesystem::remove_all(dir);
}

TEST_CASE("placement end to end") {
  Api api;
  const auto t = api.user("ann");
  const auto& fi = test::pack("fi");

  // Answers and difficulties recomputed from the gold corpus and CEFR levels.
  const auto answer_of = [&](const json& item) -> std::string {
    for (const auto& g : fi.gold) {
      const auto a = test::run("fi", g.text, g.id);
      for (const auto& c : a.candidates) {
        if (std::find(c.constructs.begin(), c.constructs.end(), item["construct"]) == c.constructs.end()) continue;
        const Sentence& s = a.story.sentences[c.sentence];
        json ctx = json::array();
        for (std::size_t i = s.first_token; i < s.end_token; ++i)
          ctx.push_back(i >= c.first && i <= c.last ? json(nullptr) : json(a.story.tokens[i].surface));
        if (ctx == item["context"]) return c.answer;
      }
    }
    FAIL("placement item not found in gold");
    return {};
  };

  std::mt19937_64 rng(5);
  const double planted = 0.8;
  std::vector<std::pair<double, bool>> responses;
  auto step = api.call("POST", "/placement", t, {{"language", "fi"}});
  REQUIRE(step.status == 201);
  CHECK(step.body["theta"] == 0.0);
  const std::string pid = step.body["id"];
  while (!step.body["finished"].get<bool>()) {
    const json item = step.body["item"];
    CHECK(item["lemma"].is_string());
    const ConstructDef* def = fi.find_construct(item["construct"].get<std::string>());
    REQUIRE(def);
    const double b = cefr_fallback(*def);
    const bool correct = std::bernoulli_distribution(1.0 / (1.0 + std::exp(-(planted - b))))(rng);
    step = api.call("POST", "/placement/" + pid + "/answer", t, {{"answer", correct ? answer_of(item) : "qwerty"}});
    REQUIRE(step.status == 200);
    CHECK(step.body["correct"] == correct);
    responses.emplace_back(b, correct);
  }
  CHECK(responses.size() <= 20);
  CHECK(step.body["theta"].get<double>() == doctest::Approx(estimate_ability(responses).theta));
  CHECK(api.call("POST", "/placement/" + pid + "/answer", t, {{"answer", "x"}}).status == 409);
  const auto me = api.call("GET", "/me", t).body;
  CHECK(me["ability"]["fi"]["theta"].get<double>() == doctest::Approx(step.body["theta"].get<double>()));
}
