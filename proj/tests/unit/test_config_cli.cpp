#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "smartfl/cli.hpp"
#include "smartfl/config.hpp"
#include "smartfl/errors.hpp"

using namespace smartfl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int cli(const std::string& args) {
  const std::string cmd = std::string(SMARTFL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const fs::path kQuick = fs::path(SMARTFL_CONFIG_DIR) / "quick_synthetic.json";

}  // namespace

TEST_CASE("bundled configs parse") {
  for (const char* name : {"quick_synthetic.json", "noniid_sweep.json", "attack_sweep.json",
                           "proxy_size_sweep.json", "mnist_idx.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(fs::path(SMARTFL_CONFIG_DIR) / name));
  }
  auto cfg = load_config(fs::path(SMARTFL_CONFIG_DIR) / "attack_sweep.json");
  CHECK(cfg.attack.kind == AttackKind::kOmniscient);
  CHECK(cfg.attack.scale == 20.0);
  CHECK(cfg.clients_per_round() == 8);
}

TEST_CASE("config round-trips through JSON") {
  auto cfg = load_config(kQuick);
  auto doc = config_to_json(cfg);
  CHECK(config_to_json(config_from_json(doc)) == doc);

  ExperimentConfig defaults = config_from_json(json::object({{"proxy", {{"size", 16}}}}));
  CHECK(defaults.aggregation.strategy == Strategy::kFedAvg);
  CHECK(defaults.aggregation.server_epochs == 20);
  CHECK(defaults.aggregation.server_lr == 1e-2);
  CHECK(defaults.local.batch_size == 32);
}

TEST_CASE("config errors name the offending field") {
  auto doc = read_config_file(kQuick);

  auto unknown = doc;
  unknown["model"]["kernel"] = 3;
  CHECK(error_of(unknown).find("model.kernel") != std::string::npos);

  auto wrong_type = doc;
  wrong_type["federation"]["clients"] = "ten";
  CHECK(error_of(wrong_type).find("federation.clients") != std::string::npos);

  auto negative = doc;
  negative["local"]["epochs"] = -1;
  CHECK(error_of(negative).find("local.epochs") != std::string::npos);

  auto bad_enum = doc;
  bad_enum["aggregation"]["strategy"] = "bulyan";
  CHECK(error_of(bad_enum).find("bulyan") != std::string::npos);

  auto unlabeled = doc;
  unlabeled["proxy"]["labeled"] = false;
  CHECK_FALSE(error_of(unlabeled).empty());

  auto no_proxy = doc;
  no_proxy["proxy"]["size"] = 0;
  CHECK_FALSE(error_of(no_proxy).empty());

  auto tiny = doc;
  tiny["federation"]["participation"] = 0.0;
  CHECK_FALSE(error_of(tiny).empty());

  try {
    parse_config_text("{\n  \"seed\": 1,\n  \"model\": {,}\n}", "broken.json");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("broken.json") != std::string::npos);
    CHECK(what.find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(read_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("dotted overrides") {
  json doc = json::object();
  apply_override(doc, "federation.alpha", "0.5");
  apply_override(doc, "aggregation.strategy", "krum");
  apply_override(doc, "proxy.labeled", "false");
  CHECK(doc["federation"]["alpha"] == 0.5);
  CHECK(doc["aggregation"]["strategy"] == "krum");
  CHECK(doc["proxy"]["labeled"] == false);
}

TEST_CASE("output paths") {
  CHECK(sweep_output_path("out/m.csv", "federation.alpha", "0.1") == fs::path("out/m_federation.alpha=0.1.csv"));
  CHECK(sweep_output_path("m.json", "aggregation.strategy", "smartfl") ==
        fs::path("m_aggregation.strategy=smartfl.json"));
}

TEST_CASE("cli run writes metrics and honours the output directory") {
  TempDir tmp("smartfl_cli_run");
  CHECK(cli("run --config " + kQuick.string() + " --out " + (tmp.path / "a.csv").string()) == 0);
  CHECK(fs::exists(tmp.path / "a.csv"));

  const std::string env = "SMARTFL_OUTPUT_DIR=" + (tmp.path / "env").string() + " ";
  const int status = std::system((env + SMARTFL_CLI_PATH + " run --config " + kQuick.string() +
                                  " --seed 3 --out ignored/b.json >/dev/null 2>&1")
                                     .c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(tmp.path / "env" / "b.json"));

  CHECK(cli("sweep --config " + kQuick.string() + " --param federation.alpha --values 0.1,1.0 --out " +
            (tmp.path / "s.csv").string()) == 0);
  CHECK(fs::exists(tmp.path / "s_federation.alpha=0.1.csv"));
  CHECK(fs::exists(tmp.path / "s_federation.alpha=1.0.csv"));
}

TEST_CASE("cli exit codes") {
  TempDir tmp("smartfl_cli_codes");
  write_text(tmp.path / "broken.json", "{ \"seed\": 1,, }");
  CHECK(cli("run --config " + (tmp.path / "broken.json").string()) == 1);

  write_text(tmp.path / "unknown.json", "{ \"federation\": {\"clientz\": 3} }");
  CHECK(cli("run --config " + (tmp.path / "unknown.json").string()) == 1);

  CHECK(cli("run --config " + kQuick.string() + " --bogus-flag") == 1);
  CHECK(cli("") == 1);

  auto doc = read_config_file(kQuick);
  doc["local"]["optimizer"] = "sgd";
  doc["local"]["lr"] = 1e308;
  doc["output"] = (tmp.path / "div.csv").string();
  write_text(tmp.path / "diverge.json", doc.dump());
  CHECK(cli("run --config " + (tmp.path / "diverge.json").string()) == 2);

  CHECK(cli("check") == 0);
}
