#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "smartfl/config.hpp"
#include "smartfl/experiment.hpp"

namespace smartfl {

/// Long-format CSV header; one row per sampled client per round. Rounds with
/// no sampled clients (round 0, skipped rounds) get one row with empty
/// client fields. Absent values are empty fields.
inline constexpr const char* kCsvHeader =
    "round,client_id,coefficient,is_malicious,test_acc,test_loss,proxy_loss_before,proxy_loss_after";

void write_csv(const std::vector<RoundRecord>& records, std::ostream& out);
nlohmann::json records_to_json(const std::vector<RoundRecord>& records);
std::vector<RoundRecord> records_from_json(const nlohmann::json& doc);

/// Writes records to `path`, creating parent directories. I/O failures throw
/// std::runtime_error naming the path.
void write_metrics(const std::vector<RoundRecord>& records, const std::filesystem::path& path,
                   MetricsFormat format);
std::vector<RoundRecord> read_metrics_json(const std::filesystem::path& path);

}  // namespace smartfl
