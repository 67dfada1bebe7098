// Command line front end. Every subcommand is a thin wrapper over the
// file-level operations in medpipe/pipeline.hpp so that CLI runs and
// config-driven runs behave identically.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "medpipe/error.hpp"
#include "medpipe/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string output_dir = ".";
    int jobs = 1;
    long long seed = 0;
};

// Output locations are interpreted relative to --output-dir; inputs are
// taken as given. Parent directories are created on demand.
fs::path out_path(const GlobalOpts& g, const std::string& p) {
    fs::path path(p);
    if (!path.is_absolute()) path = fs::path(g.output_dir) / path;
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    return path;
}

void print_stats(const json& stats) { std::cout << stats.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medical imaging and document evaluation toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--output-dir", g.output_dir, "directory for output files")
        ->envname("MEDPIPE_OUTPUT_DIR");
    app.add_option("--jobs", g.jobs, "worker count (execution stays deterministic)")
        ->envname("MEDPIPE_JOBS");
    app.add_option("--seed", g.seed, "seed recorded in run reports")
        ->envname("MEDPIPE_SEED");

    std::string input, out, drop_log, pred, gold, report, judge, config;
    std::string volume, labels, out_prefix;
    long long max_len = 0;
    double iou = 0.5;
    bool no_invert = false;
    json projection = json::object();
    std::string axis = "Z";
    double angle = 0.0, i0 = 1.0, step = 0.0;

    auto* curate = app.add_subcommand("curate", "data curation passes");
    curate->require_subcommand(1);
    for (const char* name : {"filter", "dedup", "tags", "cot"}) {
        auto* sub = curate->add_subcommand(name);
        sub->add_option("--input", input, "records to process (jsonl)")->required();
        sub->add_option("--out", out, "kept records (jsonl)")->required();
        sub->add_option("--drop-log", drop_log, "dropped records (jsonl)")->required();
    }
    curate->get_subcommand("filter")->description("length and resolution filters");
    curate->get_subcommand("dedup")->description("hash based first-wins dedup");
    curate->get_subcommand("tags")->description("vocabulary tag validation");
    curate->get_subcommand("cot")->description("reasoning trace format checks");

    auto* pack = app.add_subcommand("pack", "pack token samples into fixed bins");
    pack->add_option("--input", input, "token samples (jsonl)")->required();
    pack->add_option("--max-len", max_len, "bin capacity in tokens")->required();
    pack->add_option("--out", out, "packing plan (json)")->required();

    auto* drr = app.add_subcommand("drr", "project a CT volume to a radiograph");
    drr->add_option("--volume", volume, "volume header (json)")->required();
    drr->add_option("--labels", labels, "label volume header (json)");
    drr->add_option("--axis", axis, "projection axis X|Y|Z");
    drr->add_option("--angle", angle, "rotation angle in degrees [0,360)");
    drr->add_option("--i0", i0, "unattenuated beam intensity");
    drr->add_option("--step", step, "ray step in mm (0 = half min spacing)");
    drr->add_option("--out-prefix", out_prefix, "output prefix")->required();
    drr->add_flag("--no-invert", no_invert, "write bright-is-dense images");

    auto* metrics = app.add_subcommand("metrics", "segmentation and detection metrics");
    metrics->require_subcommand(1);
    auto* mseg = metrics->add_subcommand("seg", "dice over mask pairs");
    auto* mdet = metrics->add_subcommand("det", "box precision at an IoU threshold");
    for (auto* sub : {mseg, mdet}) {
        sub->add_option("--pred", pred, "predictions (jsonl)")->required();
        sub->add_option("--gold", gold, "references (jsonl)")->required();
        sub->add_option("--report", report, "metrics report (json)")->required();
    }
    mdet->add_option("--iou", iou, "IoU threshold in (0,1]");

    auto* eval = app.add_subcommand("eval", "document evaluation protocols");
    eval->require_subcommand(1);
    for (const char* name : {"ltr-full", "ltr-simple", "ltr-complex", "gmd",
                             "report-metrics"}) {
        auto* sub = eval->add_subcommand(name);
        sub->add_option("--pred", pred, "predictions (jsonl)")->required();
        sub->add_option("--gold", gold, "references (jsonl)")->required();
        sub->add_option("--report", report, "evaluation report (json)")->required();
    }
    eval->get_subcommand("ltr-full")->description("full lab table parse scoring");
    eval->get_subcommand("ltr-simple")
        ->description("single-fact QA accuracy (judge based)")
        ->add_option("--judge", judge, "judge command reading payload json on stdin");
    eval->get_subcommand("ltr-complex")->description("result/reference/abnormal triads");
    eval->get_subcommand("gmd")
        ->description("free-text grading via an external judge")
        ->add_option("--judge", judge, "judge command reading payload json on stdin");
    eval->get_subcommand("report-metrics")->description("ROUGE-L and CIDEr over texts");
    auto* consensus = eval->add_subcommand("consensus", "difficulty bucketing");
    consensus->add_option("--input", input, "agreement records (jsonl)")->required();
    consensus->add_option("--out", out, "bucketed records (jsonl)")->required();

    auto* run = app.add_subcommand("run", "execute a staged pipeline config");
    run->add_option("--config", config, "pipeline config (json)")->required();
    run->add_option("--report", report, "run report (json)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (curate->parsed()) {
            auto* sub = curate->get_subcommands().front();
            const fs::path in(input);
            const fs::path kept = out_path(g, out);
            const fs::path dropped = out_path(g, drop_log);
            if (sub->get_name() == "filter")
                print_stats(medpipe::curate_filter_files(in, kept, dropped));
            else if (sub->get_name() == "dedup")
                print_stats(medpipe::curate_dedup_files(in, kept, dropped));
            else if (sub->get_name() == "tags")
                print_stats(medpipe::curate_tags_files(in, kept, dropped));
            else
                print_stats(medpipe::curate_cot_files(in, kept, dropped));
        } else if (pack->parsed()) {
            print_stats(medpipe::pack_files(input, max_len, out_path(g, out)));
        } else if (drr->parsed()) {
            projection["axis"] = axis;
            projection["angle_deg"] = angle;
            projection["i0"] = i0;
            if (step > 0.0) projection["step_mm"] = step;
            std::optional<fs::path> labels_path;
            if (!labels.empty()) labels_path = fs::path(labels);
            print_stats(medpipe::drr_files(volume, labels_path, projection,
                                           out_path(g, out_prefix), !no_invert));
        } else if (metrics->parsed()) {
            auto* sub = metrics->get_subcommands().front();
            if (sub->get_name() == "seg")
                print_stats(medpipe::metrics_seg_files(pred, gold, out_path(g, report)));
            else
                print_stats(
                    medpipe::metrics_det_files(pred, gold, iou, out_path(g, report)));
        } else if (eval->parsed()) {
            auto* sub = eval->get_subcommands().front();
            const std::string mode = sub->get_name();
            if (mode == "consensus") {
                print_stats(medpipe::eval_consensus_files(input, out_path(g, out)));
            } else {
                const fs::path rep = out_path(g, report);
                if (mode == "ltr-full")
                    print_stats(medpipe::eval_ltr_full_files(pred, gold, rep));
                else if (mode == "ltr-simple")
                    print_stats(medpipe::eval_ltr_simple_files(pred, gold, judge, rep));
                else if (mode == "ltr-complex")
                    print_stats(medpipe::eval_ltr_complex_files(pred, gold, rep));
                else if (mode == "gmd")
                    print_stats(medpipe::eval_gmd_files(pred, gold, judge, rep));
                else
                    print_stats(medpipe::eval_report_metrics_files(pred, gold, rep));
            }
        } else if (run->parsed()) {
            return medpipe::run_pipeline(config, out_path(g, report));
        }
    } catch (const medpipe::Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
