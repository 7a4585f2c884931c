#include "smartfl/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace smartfl {

using nlohmann::json;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void write_csv(const std::vector<RoundRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    const std::string tail = opt(r.test_acc) + ',' + opt(r.test_loss) + ',' +
                             opt(r.proxy_loss_before) + ',' + opt(r.proxy_loss_after);
    if (r.sampled_ids.empty()) {
      out << r.round << ",,,," << tail << '\n';
      continue;
    }
    for (std::size_t i = 0; i < r.sampled_ids.size(); ++i) {
      out << r.round << ',' << r.sampled_ids[i] << ','
          << (r.coefficients ? num((*r.coefficients)[i]) : std::string()) << ','
          << (r.malicious[i] ? 1 : 0) << ',' << tail << '\n';
    }
  }
}

json records_to_json(const std::vector<RoundRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json j;
    j["round"] = r.round;
    j["sampled_ids"] = r.sampled_ids;
    j["coefficients"] = r.coefficients ? json(*r.coefficients) : json(nullptr);
    j["malicious"] = r.malicious;
    j["test_acc"] = opt_json(r.test_acc);
    j["test_loss"] = opt_json(r.test_loss);
    j["proxy_acc"] = opt_json(r.proxy_acc);
    j["proxy_loss_before"] = opt_json(r.proxy_loss_before);
    j["proxy_loss_after"] = opt_json(r.proxy_loss_after);
    j["wall_ms"] = r.wall_ms;
    j["skipped"] = r.skipped;
    j["warning"] = r.warning;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<RoundRecord> records_from_json(const json& doc) {
  std::vector<RoundRecord> out;
  for (const auto& j : doc) {
    RoundRecord r;
    r.round = j.at("round").get<std::size_t>();
    r.sampled_ids = j.at("sampled_ids").get<std::vector<int>>();
    if (!j.at("coefficients").is_null()) r.coefficients = j.at("coefficients").get<std::vector<double>>();
    r.malicious = j.at("malicious").get<std::vector<bool>>();
    r.test_acc = opt_from(j, "test_acc");
    r.test_loss = opt_from(j, "test_loss");
    r.proxy_acc = opt_from(j, "proxy_acc");
    r.proxy_loss_before = opt_from(j, "proxy_loss_before");
    r.proxy_loss_after = opt_from(j, "proxy_loss_after");
    r.wall_ms = j.at("wall_ms").get<double>();
    r.skipped = j.at("skipped").get<bool>();
    r.warning = j.at("warning").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_metrics(const std::vector<RoundRecord>& records, const std::filesystem::path& path,
                   MetricsFormat format) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (format == MetricsFormat::kCsv) {
    write_csv(records, out);
  } else {
    out << records_to_json(records).dump(2) << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<RoundRecord> read_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return records_from_json(json::parse(in));
}

}  // namespace smartfl
