#include "dstofw/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "dstofw/error.hpp"

namespace dstofw {

void RunLog::set(const std::string& key, std::string value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(key, std::move(value));
}

std::optional<double> min_fw_gap_second_half(const RunLog& log) {
  const std::int64_t first = log.iterations / 2 + 1;
  std::optional<double> best;
  for (const auto& r : log.records) {
    if (r.k < first || r.k > log.iterations) continue;
    best = best ? std::min(*best, r.fw_gap) : r.fw_gap;
  }
  return best;
}

void emit_csv(const RunLog& log, std::ostream& out) {
  fmt::memory_buffer buf;
  for (const auto& [key, value] : log.metadata) fmt::format_to(std::back_inserter(buf), "# {}={}\n", key, value);
  fmt::format_to(std::back_inserter(buf), "{}\n", kCsvHeader);
  for (const auto& r : log.records) {
    fmt::format_to(std::back_inserter(buf), "{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{}\n", r.k,
                   r.gamma, r.loss, r.fw_gap, r.consensus_err, r.ifo_cum, r.lo_cum,
                   r.comm_rounds_cum, r.eval_ifo_cum);
  }
  if (const auto gap = min_fw_gap_second_half(log)) {
    fmt::format_to(std::back_inserter(buf), "# min_fw_gap_second_half={:.17g}\n", *gap);
  } else {
    fmt::format_to(std::back_inserter(buf), "# min_fw_gap_second_half=nan\n");
  }
  if (!log.records.empty()) {
    fmt::format_to(std::back_inserter(buf), "# final_loss={:.17g}\n", log.records.back().loss);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("csv: write failed");
}

void write_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("csv: cannot open '{}' for writing", path));
  emit_csv(log, out);
  out.flush();
  if (!out) throw IoError(fmt::format("csv: write to '{}' failed", path));
}

}  // namespace dstofw
