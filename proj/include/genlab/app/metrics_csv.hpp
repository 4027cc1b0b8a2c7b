#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "genlab/app/atomic_file.hpp"
#include "genlab/error.hpp"
#include "genlab/models/trainers.hpp"

namespace genlab {

inline constexpr std::string_view kMetricsHeader = "iteration,model,loss_d,loss_g,recon,kl,mode_entropy";
inline constexpr std::string_view kHingeColumn = "hinge_active";

struct MetricsRow {
    std::uint64_t iteration = 0;
    std::string model;
    std::optional<double> loss_d;
    std::optional<double> loss_g;
    std::optional<double> recon;
    std::optional<double> kl;
    std::optional<double> mode_entropy;
    std::optional<bool> hinge_active;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline MetricsRow metrics_row(ModelKind kind, const StepMetrics& m) {
    return {m.iteration, std::string(to_string(kind)), m.loss_d, m.loss_g, m.recon, m.kl, std::nullopt, m.hinge_active};
}

namespace detail {

inline std::string format_metric(const std::optional<double>& v) {
    if (!v) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    for (;;) {
        const auto comma = line.find(',');
        fields.push_back(line.substr(0, comma));
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return fields;
}

inline std::optional<double> parse_metric(std::string_view s, std::size_t line_no) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("metrics line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace detail

/// CSV text with the fixed header; constrained-model rows add a trailing
/// hinge_active column (0/1).
inline std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw ContractError("write_metrics_csv: no rows");
    const bool hinge = std::any_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.hinge_active.has_value(); });
    std::string out(kMetricsHeader);
    if (hinge) out += "," + std::string(kHingeColumn);
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.iteration) + "," + r.model;
        for (const auto* v : {&r.loss_d, &r.loss_g, &r.recon, &r.kl, &r.mode_entropy}) {
            out += "," + detail::format_metric(*v);
        }
        if (hinge) out += "," + (r.hinge_active ? std::string(*r.hinge_active ? "1" : "0") : std::string());
        out += '\n';
    }
    return out;
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
    write_file_atomic(path, format_metrics_csv(rows));
}

inline std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
    std::vector<MetricsRow> rows;
    std::size_t line_no = 0;
    bool hinge = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line_no == 1) {
            if (line == kMetricsHeader) continue;
            if (line == std::string(kMetricsHeader) + "," + std::string(kHingeColumn)) {
                hinge = true;
                continue;
            }
            throw FormatError("metrics CSV has unexpected header '" + std::string(line) + "'");
        }
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != (hinge ? 8u : 7u)) {
            throw FormatError("metrics line " + std::to_string(line_no) + ": expected " + std::to_string(hinge ? 8 : 7) +
                              " fields, found " + std::to_string(f.size()));
        }
        MetricsRow r;
        const auto it = detail::parse_metric(f[0], line_no);
        if (!it) throw FormatError("metrics line " + std::to_string(line_no) + ": missing iteration");
        r.iteration = static_cast<std::uint64_t>(*it);
        r.model = std::string(f[1]);
        r.loss_d = detail::parse_metric(f[2], line_no);
        r.loss_g = detail::parse_metric(f[3], line_no);
        r.recon = detail::parse_metric(f[4], line_no);
        r.kl = detail::parse_metric(f[5], line_no);
        r.mode_entropy = detail::parse_metric(f[6], line_no);
        if (hinge && !f[7].empty()) r.hinge_active = f[7] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open metrics file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_metrics_csv(ss.str());
}

}  // namespace genlab
