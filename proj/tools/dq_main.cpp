// dq - data quality engine CLI: synthesis, assessment, deduplication,
// anomaly detection, correction, and end-to-end pipeline runs.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dq/anomaly.hpp"
#include "dq/assess.hpp"
#include "dq/correct.hpp"
#include "dq/er.hpp"
#include "dq/error.hpp"
#include "dq/pipeline.hpp"
#include "dq/synth.hpp"
#include "dq/table.hpp"
#include "dq/truth.hpp"

namespace {

using dq::pipeline::Config;

int validation_exit(const dq::DqError& e) {
    switch (e.code()) {
        case dq::ErrorCode::MalformedCsv:
        case dq::ErrorCode::SchemaMismatch:
        case dq::ErrorCode::BadTimestamp:
        case dq::ErrorCode::BadConfig:
        case dq::ErrorCode::BadFactor:
        case dq::ErrorCode::RateConflict:
        case dq::ErrorCode::IoError: return 1;
        default: return 2;
    }
}

void dump_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) dq::fail(dq::ErrorCode::IoError, "cannot write " + path);
    out << j.dump(2) << "\n";
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) dq::fail(dq::ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        dq::fail(dq::ErrorCode::BadConfig, path + ": " + e.what());
    }
    return j;
}

dq::Table load_input(const std::string& input, const Config& cfg, const std::string& meta_flag) {
    dq::LoadOptions opts;
    opts.schema = cfg.schema;
    opts.meta_path = meta_flag.empty() ? cfg.meta_path : meta_flag;
    opts.now = cfg.evaluated_at;
    return dq::load_csv(input, opts);
}

dq::Table synth_table(const Config& cfg, const dq::synth::InjectionSpec& spec,
                      dq::GroundTruth* truth_out) {
    dq::Table base = dq::synth::generate_base(cfg.synth_rows, cfg.synth_seed, cfg.evaluated_at);
    auto injected = dq::synth::inject(base, spec);
    if (truth_out) *truth_out = std::move(injected.truth);
    return std::move(injected.table);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dq - weighted quality scoring, anomaly detection and correction for tabular data"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    std::size_t synth_rows = 1000;
    uint64_t synth_seed = 1;
    std::string synth_inject, synth_out, synth_truth, synth_meta, synth_now;
    synth_cmd->add_option("--rows", synth_rows, "row count")->required();
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--inject", synth_inject, "injection spec JSON");
    synth_cmd->add_option("--out", synth_out, "output CSV")->required();
    synth_cmd->add_option("--truth", synth_truth, "ground-truth JSON output");
    synth_cmd->add_option("--meta", synth_meta, "metadata sidecar JSON output");
    synth_cmd->add_option("--now", synth_now, "evaluation timestamp (ISO-8601)");

    // ---- assess ---------------------------------------------------------
    auto* assess_cmd = app.add_subcommand("assess", "compute the weighted quality report");
    std::string in_path, cfg_path, out_path, meta_path;
    assess_cmd->add_option("--input", in_path, "input CSV")->required();
    assess_cmd->add_option("--config", cfg_path, "config JSON")->required();
    assess_cmd->add_option("--meta", meta_path, "metadata sidecar JSON");
    assess_cmd->add_option("--out", out_path, "quality report output")->required();

    // ---- dedupe ---------------------------------------------------------
    auto* dedupe_cmd = app.add_subcommand("dedupe", "detect duplicate clusters");
    std::string dd_in, dd_cfg, dd_out, dd_model, dd_meta;
    dedupe_cmd->add_option("--input", dd_in, "input CSV")->required();
    dedupe_cmd->add_option("--config", dd_cfg, "config JSON")->required();
    dedupe_cmd->add_option("--out", dd_out, "clusters JSON output")->required();
    dedupe_cmd->add_option("--model", dd_model, "match model JSON output");
    dedupe_cmd->add_option("--meta", dd_meta, "metadata sidecar JSON");

    // ---- detect ---------------------------------------------------------
    auto* detect_cmd = app.add_subcommand("detect", "detect quality anomalies");
    std::string dt_in, dt_cfg, dt_out, dt_meta;
    detect_cmd->add_option("--input", dt_in, "input CSV")->required();
    detect_cmd->add_option("--config", dt_cfg, "config JSON")->required();
    detect_cmd->add_option("--out", dt_out, "anomaly report output")->required();
    detect_cmd->add_option("--meta", dt_meta, "metadata sidecar JSON");

    // ---- correct --------------------------------------------------------
    auto* correct_cmd = app.add_subcommand("correct", "correct detected anomalies");
    std::string cr_in, cr_anoms, cr_cfg, cr_out, cr_log, cr_meta;
    correct_cmd->add_option("--input", cr_in, "input CSV")->required();
    correct_cmd->add_option("--anomalies", cr_anoms, "anomaly report JSON")->required();
    correct_cmd->add_option("--config", cr_cfg, "config JSON")->required();
    correct_cmd->add_option("--out", cr_out, "corrected CSV output")->required();
    correct_cmd->add_option("--changelog", cr_log, "JSONL change log output")->required();
    correct_cmd->add_option("--meta", cr_meta, "metadata sidecar JSON");

    // ---- eval -----------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate against ground truth");
    std::string ev_pred, ev_log, ev_truth, ev_out;
    eval_cmd->add_option("--pred", ev_pred, "anomaly report JSON")->required();
    eval_cmd->add_option("--changelog", ev_log, "JSONL change log");
    eval_cmd->add_option("--truth", ev_truth, "ground truth JSON")->required();
    eval_cmd->add_option("--out", ev_out, "evaluation output")->required();

    // ---- pipeline ---------------------------------------------------------
    auto* pipe_cmd = app.add_subcommand("pipeline", "run assess-detect-correct end to end");
    std::string pl_in, pl_cfg, pl_outdir, pl_truth, pl_meta, pl_inject;
    bool pl_synth = false;
    std::size_t pl_rows = 0;
    uint64_t pl_seed = 0;
    pipe_cmd->add_option("--input", pl_in, "input CSV (omit with --synth)");
    pipe_cmd->add_flag("--synth", pl_synth, "generate the input synthetically");
    pipe_cmd->add_option("--rows", pl_rows, "synthetic row count");
    pipe_cmd->add_option("--seed", pl_seed, "synthetic generator seed");
    pipe_cmd->add_option("--inject", pl_inject, "injection spec JSON (synth mode)");
    pipe_cmd->add_option("--config", pl_cfg, "config JSON")->required();
    pipe_cmd->add_option("--outdir", pl_outdir, "artifact directory")->required();
    pipe_cmd->add_option("--truth", pl_truth, "ground truth JSON (for --input data)");
    pipe_cmd->add_option("--meta", pl_meta, "metadata sidecar JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            Config cfg;
            cfg.synth_rows = synth_rows;
            cfg.synth_seed = synth_seed;
            if (!synth_now.empty()) {
                auto ts = dq::timeparse::parse_iso(synth_now);
                if (!ts) dq::fail(dq::ErrorCode::BadConfig, "--now must be ISO-8601");
                cfg.evaluated_at = *ts;
            }
            dq::synth::InjectionSpec spec;
            if (!synth_inject.empty())
                spec = dq::synth::InjectionSpec::from_json(load_json(synth_inject));
            dq::GroundTruth truth;
            dq::Table table = synth_table(cfg, spec, &truth);
            dq::pipeline::write_table_csv(synth_out, table);
            if (!synth_truth.empty()) truth.save(synth_truth);
            if (!synth_meta.empty()) dq::pipeline::write_meta_sidecar(synth_meta, table);
            return 0;
        }
        if (*assess_cmd) {
            Config cfg = Config::load(cfg_path);
            dq::Table t = load_input(in_path, cfg, meta_path);
            dq::Lexicon lexicon =
                dq::pipeline::build_lexicon(dq::preprocess(t, cfg.preprocess), cfg.lexicon);
            auto report = dq::pipeline::assess_table(t, cfg, lexicon);
            dump_json(out_path, report.to_json());
            return 0;
        }
        if (*dedupe_cmd) {
            Config cfg = Config::load(dd_cfg);
            dq::Table raw = load_input(dd_in, cfg, dd_meta);
            dq::Table t = dq::preprocess(raw, cfg.preprocess);
            dq::er::MatchModel model = dq::er::fit(t, cfg.detect.er);
            auto clusters = dq::er::resolve(t, model, cfg.detect.er);
            dump_json(dd_out, dq::er::clusters_to_json(clusters, model.version));
            if (!dd_model.empty()) dump_json(dd_model, model.to_json());
            return 0;
        }
        if (*detect_cmd) {
            Config cfg = Config::load(dt_cfg);
            dq::Table raw = load_input(dt_in, cfg, dt_meta);
            dq::Table t = dq::preprocess(raw, cfg.preprocess);
            dq::Lexicon lexicon = dq::pipeline::build_lexicon(t, cfg.lexicon);
            auto report = dq::anomaly::detect(t, cfg.detect,
                                              lexicon.empty() ? nullptr : &lexicon);
            dump_json(dt_out, report.to_json());
            return 0;
        }
        if (*correct_cmd) {
            Config cfg = Config::load(cr_cfg);
            dq::Table raw = load_input(cr_in, cfg, cr_meta);
            dq::Table t = dq::preprocess(raw, cfg.preprocess);
            auto report = dq::anomaly::AnomalyReport::from_json(load_json(cr_anoms));
            dq::Lexicon lexicon = dq::pipeline::build_lexicon(t, cfg.lexicon);
            auto result = dq::correct::correct_all(t, report, cfg.correction,
                                                   lexicon.empty() ? nullptr : &lexicon);
            dq::pipeline::write_table_csv(cr_out, result.corrected);
            dq::correct::write_changelog(cr_log, result.log);
            return 0;
        }
        if (*eval_cmd) {
            auto report = dq::anomaly::AnomalyReport::from_json(load_json(ev_pred));
            dq::GroundTruth truth = dq::GroundTruth::load(ev_truth);
            nlohmann::json out;
            if (report.params.contains("table")) {
                auto rows = report.params["table"]["rows"].get<std::size_t>();
                auto columns =
                    report.params["table"]["columns"].get<std::vector<std::string>>();
                auto detection = dq::anomaly::evaluate_detection(report, truth, rows, columns);
                out["detection"] = detection.to_json();
            }
            if (!ev_log.empty()) {
                auto log = dq::correct::read_changelog(ev_log);
                auto correction = dq::correct::evaluate_correction(log, truth);
                out["correction"] = {{"correct", correction.correct},
                                     {"total", correction.total},
                                     {"accuracy", correction.accuracy},
                                     {"error_rate", correction.error_rate}};
            }
            dump_json(ev_out, out);
            return 0;
        }
        if (*pipe_cmd) {
            Config cfg = Config::load(pl_cfg);
            if (pl_rows > 0) cfg.synth_rows = pl_rows;
            if (pipe_cmd->count("--seed")) cfg.synth_seed = pl_seed;
            dq::synth::InjectionSpec spec = cfg.injection;
            if (!pl_inject.empty())
                spec = dq::synth::InjectionSpec::from_json(load_json(pl_inject));

            dq::GroundTruth truth;
            bool has_truth = false;
            dq::Table table;
            if (pl_synth) {
                Config synth_cfg = cfg;
                synth_cfg.injection = spec;
                table = synth_table(synth_cfg, spec, &truth);
                has_truth = true;
                for (const auto& [name, kind] : dq::synth::schema()) cfg.schema[name] = kind;
                cfg.lexicon.use_domain_pools = true;
                cfg.lexicon.use_frequency = false;  // pools are the vocabulary
            } else {
                if (pl_in.empty())
                    dq::fail(dq::ErrorCode::BadConfig, "pipeline needs --input or --synth");
                table = load_input(pl_in, cfg, pl_meta);
                if (!pl_truth.empty()) {
                    truth = dq::GroundTruth::load(pl_truth);
                    has_truth = true;
                }
            }
            auto artifacts =
                dq::pipeline::run_pipeline(table, has_truth ? &truth : nullptr, cfg);
            dq::pipeline::write_artifacts(pl_outdir, artifacts, cfg);
            if (pl_synth) {
                namespace fs = std::filesystem;
                dq::pipeline::write_table_csv((fs::path(pl_outdir) / "data.csv").string(), table);
                truth.save((fs::path(pl_outdir) / "truth.json").string());
            }
            return 0;
        }
    } catch (const dq::DqError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return validation_exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
