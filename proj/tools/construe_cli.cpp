// construe: command-line front end over the C API.

#include <construe/construe.h>

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Owns a string returned by the library.
struct Out {
  char* s = nullptr;
  ~Out() { cns_string_free(s); }
};

int report(cns_status st) {
  std::cerr << "construe: " << cns_status_name(st) << ": " << cns_last_error() << "\n";
  return 2;
}

bool read_text(const std::string& path, std::string& text) {
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), {});
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  text.assign(std::istreambuf_iterator<char>(in), {});
  return true;
}

int cmd_validate(const std::string& dir) {
  Out out;
  if (const cns_status st = cns_pack_validate(dir.c_str(), &out.s)) return report(st);
  std::cout << out.s << "\n";
  return json::parse(out.s).at("valid").get<bool>() ? 0 : 1;
}

struct AnnotateOptions {
  std::string pack, input, gold;
  bool pack_gold = false;
  std::string id = "story";
};

int cmd_annotate(const AnnotateOptions& o) {
  cns_pack* pack = nullptr;
  if (const cns_status st = cns_pack_open(o.pack.c_str(), &pack)) return report(st);
  Out out;
  cns_status st = CNS_OK;
  if (!o.gold.empty() || o.pack_gold) {
    st = cns_detect_gold(pack, o.gold.empty() ? nullptr : o.gold.c_str(), &out.s);
  } else {
    std::string text;
    if (!read_text(o.input, text)) {
      cns_pack_close(pack);
      std::cerr << "construe: cannot read " << o.input << "\n";
      return 2;
    }
    st = cns_annotate(pack, o.id.c_str(), text.c_str(), &out.s);
  }
  cns_pack_close(pack);
  if (st) return report(st);
  std::cout << out.s << "\n";
  return 0;
}

struct SimulateOptions {
  std::size_t learners = 200, constructs = 100, answers = 100;
  double theta_sd = 1.0, b_sd = 1.0;
  std::uint64_t seed = 7;
  std::string events;
};

int cmd_simulate(const SimulateOptions& o) {
  const json spec{{"learners", o.learners}, {"constructs", o.constructs}, {"answers", o.answers},
                  {"theta_sd", o.theta_sd}, {"b_sd", o.b_sd},             {"seed", o.seed}};
  Out out;
  if (const cns_status st = cns_simulate(spec.dump().c_str(), o.events.empty() ? nullptr : o.events.c_str(), &out.s))
    return report(st);
  std::cout << out.s << "\n";
  return 0;
}

struct ServeOptions {
  std::string packs_dir;
  std::vector<std::string> packs;  // lang=dir
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t density = 3;
};

int cmd_serve(const ServeOptions& o) {
  json packs = json::object();
  if (!o.packs_dir.empty()) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(o.packs_dir, ec)) {
      if (!fs::exists(entry.path() / "manifest.json")) continue;
      std::ifstream in(entry.path() / "manifest.json");
      const json m = json::parse(in, nullptr, false);
      if (m.is_object() && m.contains("language")) packs[m["language"].get<std::string>()] = entry.path().string();
    }
    if (ec) {
      std::cerr << "construe: cannot list " << o.packs_dir << ": " << ec.message() << "\n";
      return 2;
    }
  }
  for (const auto& spec : o.packs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "construe: --pack expects LANG=DIR, got '" << spec << "'\n";
      return 2;
    }
    packs[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  if (packs.empty()) {
    std::cerr << "construe: no language packs given (use --packs-dir or --pack)\n";
    return 2;
  }
  if (!o.data_dir.empty()) fs::create_directories(o.data_dir);
  const json config{{"packs", packs}, {"data_dir", o.data_dir}, {"default_density", o.density}};

  cns_service* service = nullptr;
  if (const cns_status st = cns_service_create(config.dump().c_str(), &service)) return report(st);

  // Signals are taken synchronously by the main thread; the server runs on its own.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  cns_status result = CNS_OK;
  std::thread server([&] {
    result = cns_service_serve(
        service, o.host.c_str(), o.port,
        [](int port, void* user) {
          std::cout << "listening on http://" << *static_cast<const std::string*>(user) << ":" << port << "/api/v1\n"
                    << std::flush;
        },
        const_cast<std::string*>(&o.host));
    if (result != CNS_OK) kill(getpid(), SIGTERM);
  });
  int sig = 0;
  sigwait(&set, &sig);
  cns_service_stop(service);
  server.join();
  cns_service_destroy(service);
  return result == CNS_OK ? 0 : report(result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"construe: reading-based language tutoring engine"};
  app.set_version_flag("--version", std::string(cns_version()));
  app.set_config("--config", "", "TOML or INI file with option defaults; command-line flags override it");
  app.require_subcommand(1);

  auto* pack_cmd = app.add_subcommand("pack", "Language pack tools");
  pack_cmd->require_subcommand(1);
  std::string validate_dir;
  auto* validate = pack_cmd->add_subcommand("validate", "Check a pack and print a JSON violation report");
  validate->add_option("dir", validate_dir, "Pack directory")->required()->check(CLI::ExistingDirectory);

  AnnotateOptions ann;
  auto* annotate = app.add_subcommand("annotate", "Tokenize, tag, chunk and detect constructs in a text");
  annotate->add_option("--pack", ann.pack, "Pack directory")->required()->check(CLI::ExistingDirectory);
  annotate->add_option("input", ann.input, "Text file, or - for stdin");
  annotate->add_option("--id", ann.id, "Story id used in the output")->capture_default_str();
  auto* gold_opt =
      annotate->add_option("--gold", ann.gold, "Detect over a gold file and print results in gold shape")
          ->check(CLI::ExistingFile);
  auto* pack_gold_opt = annotate->add_flag("--pack-gold", ann.pack_gold, "Like --gold, using the pack's own corpus");
  gold_opt->excludes(pack_gold_opt);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Fit the learner model to synthetic learners and report recovery");
  simulate->add_option("--learners", sim.learners, "Number of learners")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--constructs", sim.constructs, "Number of constructs")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--answers", sim.answers, "Answers per learner")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--theta-sd", sim.theta_sd, "SD of planted abilities")->capture_default_str();
  simulate->add_option("--b-sd", sim.b_sd, "SD of planted difficulties")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--events", sim.events, "Write the attempt log (NDJSON) here");

  ServeOptions srv;
  auto* serve = app.add_subcommand("serve", "Serve the JSON API over HTTP");
  serve->add_option("--packs-dir", srv.packs_dir, "Directory whose subdirectories are packs")->check(CLI::ExistingDirectory);
  serve->add_option("--pack", srv.packs, "Pack as LANG=DIR (repeatable)");
  serve->add_option("--data", srv.data_dir, "Directory for the event log; omit for an in-memory service");
  serve->add_option("--host", srv.host, "Bind address")->capture_default_str();
  serve->add_option("--port", srv.port, "Port, 0 picks a free one")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--density", srv.density, "Default exercises per paragraph")->capture_default_str()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(validate_dir);
  if (annotate->parsed()) {
    if (ann.input.empty() && ann.gold.empty() && !ann.pack_gold) {
      std::cerr << "construe: annotate needs an input file, --gold or --pack-gold\n";
      return 2;
    }
    return cmd_annotate(ann);
  }
  if (simulate->parsed()) return cmd_simulate(sim);
  if (serve->parsed()) return cmd_serve(srv);
  return 0;
}
