#include "aepl/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aepl/error.hpp"

namespace aepl {

namespace {

constexpr const char* kColumns[] = {"method",   "guidance",         "kschedule",    "metric",         "seed",
                                    "round",    "accuracy",         "consumed",     "cum_budget_ratio",
                                    "pseudo_count", "pseudo_correct", "ari",         "label_correct"};
constexpr std::size_t kColumnCount = std::size(kColumns);

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DomainError("bad number '" + std::string(s) + "' in report");
    return v;
}

std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DomainError("bad integer '" + std::string(s) + "' in report");
    return v;
}

nlohmann::ordered_json row_json(const ReportRow& row) {
    nlohmann::ordered_json j;
    j["method"] = to_string(row.method);
    j["guidance"] = to_string(row.guidance);
    j["kschedule"] = to_string(row.kschedule);
    j["metric"] = to_string(row.metric);
    j["seed"] = row.seed;
    j["round"] = row.report.round;
    j["accuracy"] = row.report.accuracy;
    j["consumed"] = row.report.consumed;
    j["cum_budget_ratio"] = row.report.cum_budget_ratio;
    j["pseudo_count"] = row.report.pseudo_count;
    j["pseudo_correct"] = row.report.pseudo_correct;
    j["ari"] = row.report.ari;
    j["label_correct"] = row.report.label_correct;
    return j;
}

ReportRow row_from_fields(const std::vector<std::string>& f) {
    ReportRow row{parse_method(f[0]), parse_guidance_mode(f[1]), parse_kschedule(f[2]), parse_metric(f[3]),
                  parse_uint(f[4]), {}};
    row.report.round = parse_uint(f[5]);
    row.report.accuracy = parse_double(f[6]);
    row.report.consumed = parse_uint(f[7]);
    row.report.cum_budget_ratio = parse_double(f[8]);
    row.report.pseudo_count = parse_uint(f[9]);
    row.report.pseudo_correct = parse_double(f[10]);
    row.report.ari = parse_double(f[11]);
    row.report.label_correct = parse_double(f[12]);
    return row;
}

// Writes to a sibling temp file and renames, so a failed run never leaves a partial report.
void write_atomically(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move report into place: " + ec.message());
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> known, const char* where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto k : known) ok |= (key == k);
        if (!ok) throw DomainError(std::string("unknown key '") + key + "' in " + where);
    }
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw DomainError("unknown report format '" + std::string(s) + "'");
}

std::string format_report(const ReportTable& table, ReportFormat format) {
    if (format == ReportFormat::Json) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& row : table.rows) arr.push_back(row_json(row));
        return arr.dump(1) + "\n";
    }
    std::string out;
    for (std::size_t i = 0; i < kColumnCount; ++i) out += (i ? "," : "") + std::string(kColumns[i]);
    out += '\n';
    for (const auto& row : table.rows) {
        const auto& r = row.report;
        const std::string fields[] = {std::string(to_string(row.method)), std::string(to_string(row.guidance)),
                                      std::string(to_string(row.kschedule)), std::string(to_string(row.metric)),
                                      std::to_string(row.seed), std::to_string(r.round), num(r.accuracy),
                                      std::to_string(r.consumed), num(r.cum_budget_ratio),
                                      std::to_string(r.pseudo_count), num(r.pseudo_correct), num(r.ari),
                                      num(r.label_correct)};
        for (std::size_t i = 0; i < kColumnCount; ++i) out += (i ? "," : "") + fields[i];
        out += '\n';
    }
    return out;
}

void emit_report(const ReportTable& table, const std::filesystem::path& path, ReportFormat format) {
    write_atomically(path, format_report(table, format));
}

void emit_report(const ReportTable& table, const std::filesystem::path& path, std::string_view format) {
    emit_report(table, path, parse_report_format(format));
}

std::vector<ReportRow> parse_report(std::string_view text, ReportFormat format) {
    std::vector<ReportRow> rows;
    if (format == ReportFormat::Json) {
        for (const auto& j : nlohmann::json::parse(text)) {
            std::vector<std::string> f;
            for (const char* col : kColumns) {
                const auto& v = j.at(col);
                f.push_back(v.is_string() ? v.get<std::string>() : (v.is_number_float() ? num(v.get<double>()) : v.dump()));
            }
            rows.push_back(row_from_fields(f));
        }
        return rows;
    }
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw DomainError("empty report");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != kColumnCount) throw DomainError("report row has " + std::to_string(f.size()) + " columns");
        rows.push_back(row_from_fields(f));
    }
    return rows;
}

std::string format_summary_csv(const ReportTable& table) {
    std::string out =
        "method,guidance,kschedule,metric,round,runs,accuracy_mean,accuracy_std,cum_budget_ratio_mean,"
        "cum_budget_ratio_std,pseudo_correct_mean,ari_mean\n";
    for (const auto& a : table.aggregates) {
        out += std::string(to_string(a.method)) + "," + std::string(to_string(a.guidance)) + "," +
               std::string(to_string(a.kschedule)) + "," + std::string(to_string(a.metric)) + "," +
               std::to_string(a.round) + "," + std::to_string(a.runs) + "," + num(a.accuracy_mean) + "," +
               num(a.accuracy_std) + "," + num(a.cum_budget_ratio_mean) + "," + num(a.cum_budget_ratio_std) + "," +
               num(a.pseudo_correct_mean) + "," + num(a.ari_mean) + "\n";
    }
    return out;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    return {{"method", to_string(cfg.method)},
            {"guidance", to_string(cfg.guidance)},
            {"kschedule", to_string(cfg.kschedule)},
            {"metric", to_string(cfg.metric)},
            {"rounds", cfg.rounds},
            {"budget", cfg.budget},
            {"tau", cfg.tau},
            {"train",
             {{"epochs", cfg.train.epochs},
              {"lr0", cfg.train.lr0},
              {"init_std", cfg.train.init_std},
              {"batch", cfg.train.batch}}},
            {"seeds", cfg.seeds},
            {"selective_querying", cfg.selective_querying},
            {"thresholds_include_pseudo", cfg.thresholds_include_pseudo},
            {"allow_ground_truth", cfg.allow_ground_truth},
            {"kmeans", {{"max_iter", cfg.kmeans.max_iter}, {"tol", cfg.kmeans.tol}}}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DomainError("experiment config must be a JSON object");
    reject_unknown_keys(j,
                        {"method", "guidance", "kschedule", "metric", "rounds", "budget", "tau", "train", "seeds",
                         "selective_querying", "thresholds_include_pseudo", "allow_ground_truth", "kmeans"},
                        "experiment config");
    try {
        ExperimentConfig cfg;
        if (j.contains("method")) cfg.method = parse_method(j.at("method").get<std::string>());
        if (j.contains("guidance")) cfg.guidance = parse_guidance_mode(j.at("guidance").get<std::string>());
        if (j.contains("kschedule")) cfg.kschedule = parse_kschedule(j.at("kschedule").get<std::string>());
        if (j.contains("metric")) cfg.metric = parse_metric(j.at("metric").get<std::string>());
        cfg.rounds = get_or(j, "rounds", cfg.rounds);
        cfg.budget = get_or(j, "budget", cfg.budget);
        cfg.tau = get_or(j, "tau", cfg.tau);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown_keys(t, {"epochs", "lr0", "init_std", "batch"}, "train");
            cfg.train.epochs = get_or(t, "epochs", cfg.train.epochs);
            cfg.train.lr0 = get_or(t, "lr0", cfg.train.lr0);
            cfg.train.init_std = get_or(t, "init_std", cfg.train.init_std);
            cfg.train.batch = get_or(t, "batch", cfg.train.batch);
        }
        cfg.seeds = get_or(j, "seeds", cfg.seeds);
        cfg.selective_querying = get_or(j, "selective_querying", cfg.method == Method::CB_SQ);
        cfg.thresholds_include_pseudo = get_or(j, "thresholds_include_pseudo", cfg.thresholds_include_pseudo);
        cfg.allow_ground_truth = get_or(j, "allow_ground_truth", cfg.allow_ground_truth);
        if (j.contains("kmeans")) {
            const auto& k = j.at("kmeans");
            reject_unknown_keys(k, {"max_iter", "tol"}, "kmeans");
            cfg.kmeans.max_iter = get_or(k, "max_iter", cfg.kmeans.max_iter);
            cfg.kmeans.tol = get_or(k, "tol", cfg.kmeans.tol);
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bad experiment config: ") + e.what());
    }
}

std::pair<std::vector<ExperimentConfig>, std::vector<std::uint64_t>> expand_matrix(const nlohmann::json& j) {
    if (!j.is_object()) throw DomainError("config matrix must be a JSON object");
    auto as_list = [&](const char* key, const char* fallback) {
        std::vector<std::string> out;
        if (!j.contains(key)) return std::vector<std::string>{fallback};
        const auto& v = j.at(key);
        if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
        out = v.get<std::vector<std::string>>();
        if (out.empty()) throw DomainError(std::string("matrix list '") + key + "' is empty");
        return out;
    };
    const auto methods = as_list("method", "cb_sq");
    const auto guidances = as_list("guidance", "class_soft");
    const auto schedules = as_list("kschedule", "linear_br");
    const auto metrics = as_list("metric", "cosine");

    nlohmann::json base = j;
    for (const char* key : {"method", "guidance", "kschedule", "metric"}) base.erase(key);
    std::vector<ExperimentConfig> configs;
    for (const auto& m : methods)
        for (const auto& g : guidances)
            for (const auto& s : schedules)
                for (const auto& mt : metrics) {
                    nlohmann::json cell = base;
                    cell["method"] = m;
                    cell["guidance"] = g;
                    cell["kschedule"] = s;
                    cell["metric"] = mt;
                    configs.push_back(experiment_config_from_json(cell));
                }
    const auto seeds = configs.front().seeds;
    if (seeds.empty()) throw DomainError("config matrix has an empty seed list");
    return {configs, seeds};
}

nlohmann::json to_json(const RoundSnapshot& s) {
    auto head_json = [](const PromptHead& h) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t k = 0; k < h.num_classes(); ++k) {
            auto r = h.weights.row(k);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        return nlohmann::json{{"tau", h.tau}, {"weights", rows}};
    };
    nlohmann::json j;
    j["round"] = s.round;
    j["previous_head"] = head_json(s.previous_head);
    j["trained_head"] = head_json(s.trained_head);
    j["candidates"] = s.candidates;
    if (s.thresholds) {
        auto eps = nlohmann::json::array();
        // +inf (always query) has no JSON spelling; it is written as null.
        for (double e : s.thresholds->eps) eps.push_back(std::isinf(e) ? nlohmann::json() : nlohmann::json(e));
        j["thresholds"] = eps;
    } else {
        j["thresholds"] = nullptr;
    }
    auto decisions = nlohmann::json::array();
    for (const auto& d : s.decisions)
        decisions.push_back({{"index", d.index},
                             {"action", d.action == QueryAction::Query ? "query" : "pseudo_label"},
                             {"label", d.assigned_label},
                             {"confidence", d.confidence}});
    j["decisions"] = decisions;
    auto pool = nlohmann::json::array();
    for (const auto& r : s.pool.records())
        pool.push_back({{"index", r.index}, {"label", r.label}, {"pseudo", r.is_pseudo}});
    j["pool"] = pool;
    auto ledger = nlohmann::json::array();
    for (const auto& r : s.ledger.per_round()) ledger.push_back({{"queried", r.queried}, {"pseudo", r.pseudo}});
    j["ledger"] = ledger;
    j["cluster_assignments"] = s.cluster_assignments;
    return j;
}

}  // namespace aepl
