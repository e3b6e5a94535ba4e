#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pate/errors.hpp"

namespace pate {

/// One structured evaluation record. Reports are line-delimited JSON, one
/// object per evaluation. wall_time is informational; every other field is
/// reproducible bit-identically given the same config, seed and worker count.
struct ReportRecord {
    std::string phase;   // parent | child | ensemble | independent | bagged-member | ...
    int member_id = -1;  // -1 for aggregates
    double accuracy = 0.0;
    double nll = 0.0;
    double ece = 0.0;
    double wall_time = 0.0;  // seconds
    nlohmann::json extra;    // optional fields (ablation axis/cell, measure, ...)

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["phase"] = phase;
        j["member_id"] = member_id;
        j["accuracy"] = accuracy;
        j["nll"] = nll;
        j["ece"] = ece;
        j["wall_time"] = wall_time;
        if (extra.is_object())
            for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
        return j;
    }
};

/// Appends records to a JSONL file (when a path is given) and keeps them in
/// memory for the caller.
class ReportWriter {
public:
    ReportWriter() = default;

    explicit ReportWriter(const std::string& path) {
        if (path.empty()) return;
        out_.open(path, std::ios::app);
        if (!out_) throw io_error("report: cannot open " + path + " for writing");
    }

    void write(const ReportRecord& rec) {
        records_.push_back(rec);
        if (out_.is_open()) {
            out_ << rec.to_json().dump() << '\n';
            out_.flush();
        }
    }

    const std::vector<ReportRecord>& records() const { return records_; }

private:
    std::ofstream out_;
    std::vector<ReportRecord> records_;
};

}  // namespace pate
