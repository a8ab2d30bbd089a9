// Hyperparameter and ablation sweeps: one multi-seed base-to-new run per setting.
#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "sept/evaluation.hpp"

namespace sept {

enum class SweepAxis { lambda, neighbors, flags, margin_mode };

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::lambda: return "lambda";
        case SweepAxis::neighbors: return "neighbors";
        case SweepAxis::flags: return "flags";
        case SweepAxis::margin_mode: return "margin-mode";
    }
    return "?";
}

inline SweepAxis sweep_axis_from_string(std::string_view s) {
    if (s == "lambda") return SweepAxis::lambda;
    if (s == "neighbors" || s == "n") return SweepAxis::neighbors;
    if (s == "flags" || s == "flag-grid") return SweepAxis::flags;
    if (s == "margin-mode") return SweepAxis::margin_mode;
    fail(ErrorKind::config, "unknown sweep axis '" + std::string(s) + "'");
}

struct SweepSetting {
    std::string label;
    TrainConfig config;
};

/// The seven intra/inter/margin combinations, starting with the CE-only baseline.
inline std::vector<std::pair<std::string, AblationFlags>> flag_grid() {
    auto f = [](bool intra, bool m_intra, bool inter, bool m_inter) {
        AblationFlags a;
        a.use_intra = intra;
        a.intra_margin = intra && m_intra;
        a.use_inter = inter;
        a.inter_margin = inter && m_inter;
        return a;
    };
    return {{"baseline", f(false, false, false, false)},     {"intra", f(true, false, false, false)},
            {"intra+m", f(true, true, false, false)},        {"inter", f(false, false, true, false)},
            {"inter+m", f(false, false, true, true)},        {"intra+inter", f(true, false, true, false)},
            {"intra+m+inter+m", f(true, true, true, true)}};
}

inline std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

/// Settings for an axis. `values` holds lambdas or neighbor counts; the flag and
/// margin-mode axes ignore it.
inline std::vector<SweepSetting> sweep_settings(SweepAxis axis, const TrainConfig& base, const std::vector<double>& values) {
    std::vector<SweepSetting> out;
    switch (axis) {
        case SweepAxis::lambda:
            for (double v : values) {
                TrainConfig c = base;
                c.lambda = v;
                out.push_back({"lambda=" + format_number(v), c});
            }
            break;
        case SweepAxis::neighbors:
            for (double v : values) {
                require(v >= 1.0 && v == std::floor(v), ErrorKind::config, "neighbor counts must be positive integers");
                TrainConfig c = base;
                c.neighbors = static_cast<std::size_t>(v);
                out.push_back({"N=" + format_number(v), c});
            }
            break;
        case SweepAxis::flags:
            for (const auto& [label, flags] : flag_grid()) {
                TrainConfig c = base;
                c.flags = flags;
                c.flags.margin_mode = base.flags.margin_mode;
                out.push_back({label, c});
            }
            break;
        case SweepAxis::margin_mode:
            for (MarginMode m : {MarginMode::ensemble, MarginMode::fixed_prefix}) {
                TrainConfig c = base;
                c.flags.margin_mode = m;
                out.push_back({to_string(m), c});
            }
            break;
    }
    require(!out.empty(), ErrorKind::config, "sweep axis has no settings");
    return out;
}

struct SweepRow {
    std::string label;
    TrainConfig config;
    EvalReport report;
};

struct SweepTable {
    SweepAxis axis = SweepAxis::lambda;
    std::vector<SweepRow> rows;
};

/// Every setting is trained and evaluated on all seeds (and all folds); settings
/// run in parallel and keep their listed order.
inline SweepTable run_sweep(const DatasetManifest& manifest, const NeighborSet* neighbors, const TemplatePool& pool,
                            SweepAxis axis, const std::vector<SweepSetting>& settings,
                            const std::vector<std::uint64_t>& seeds) {
    require(!settings.empty(), ErrorKind::config, "sweep axis has no settings");
    SweepTable t;
    t.axis = axis;
    t.rows.resize(settings.size());
    parallel_for(settings.size(), [&](std::size_t k) {
        t.rows[k] = {settings[k].label, settings[k].config,
                     run_base_to_new(manifest, neighbors, pool, settings[k].config, seeds)};
    });
    return t;
}

inline json to_json(const SweepTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back(json{{"setting", r.label}, {"config", to_json(r.config)}, {"report", to_json(r.report)}});
    return json{{"axis", to_string(t.axis)}, {"rows", rows}};
}

inline std::string to_csv(const SweepTable& t) {
    std::ostringstream os;
    os.precision(17);
    os << "setting,base,new,h,runs\n";
    for (const auto& r : t.rows)
        os << r.label << ',' << r.report.base << ',' << r.report.novel << ',' << r.report.h << ',' << r.report.runs.size()
           << '\n';
    return os.str();
}

}  // namespace sept
