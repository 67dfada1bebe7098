#include "medpipe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "medpipe/curation.hpp"
#include "medpipe/doceval.hpp"
#include "medpipe/error.hpp"
#include "medpipe/jsonio.hpp"
#include "medpipe/judge.hpp"
#include "medpipe/textmetrics.hpp"
#include "medpipe/volume.hpp"

namespace medpipe {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json rle_to_json(const RleMask& rle) {
    json j;
    j["size"] = {rle.height, rle.width};
    j["counts"] = rle.counts;
    return j;
}

RleMask rle_from_json(const json& j) {
    RleMask rle;
    try {
        const auto& size = j.at("size");
        if (!size.is_array() || size.size() != 2)
            throw Error("bad_input_line", "rle size must be [height, width]");
        rle.height = size[0].get<int>();
        rle.width = size[1].get<int>();
        rle.counts = j.at("counts").get<std::vector<std::int64_t>>();
    } catch (const json::exception& e) {
        throw Error("bad_input_line", std::string("bad rle object: ") + e.what());
    }
    return rle;
}

nlohmann::json box_to_json(const LabeledBox& b) {
    json j;
    j["class_id"] = b.class_id;
    j["x_min"] = b.x_min;
    j["y_min"] = b.y_min;
    j["x_max"] = b.x_max;
    j["y_max"] = b.y_max;
    return j;
}

LabeledBox box_from_json(const json& j) {
    LabeledBox b;
    try {
        b.class_id = j.at("class_id").get<int>();
        b.x_min = j.at("x_min").get<int>();
        b.y_min = j.at("y_min").get<int>();
        b.x_max = j.at("x_max").get<int>();
        b.y_max = j.at("y_max").get<int>();
    } catch (const json::exception& e) {
        throw Error("bad_input_line", std::string("bad box object: ") + e.what());
    }
    return b;
}

TokenSample token_sample_from_json(const json& j) {
    TokenSample s;
    try {
        s.id = j.at("id").get<std::string>();
        s.length = j.at("length").get<long long>();
        if (j.contains("seg_positions"))
            s.seg_positions = j["seg_positions"].get<std::vector<long long>>();
        if (j.contains("mask_refs"))
            s.mask_refs = j["mask_refs"].get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error("bad_input_line", std::string("bad sample object: ") + e.what());
    }
    return s;
}

nlohmann::json pack_plan_to_json(const PackPlan& plan) {
    json j;
    j["max_len"] = plan.max_len;
    j["bins"] = json::array();
    for (const auto& bin : plan.bins) {
        json jb = json::array();
        for (const auto& c : bin) {
            json jc;
            jc["sample_id"] = c.sample_id;
            jc["chunk_index"] = c.chunk_index;
            jc["start"] = c.start;
            jc["end"] = c.end;
            jb.push_back(jc);
        }
        j["bins"].push_back(jb);
    }
    j["index_table"] = json::array();
    for (const auto& e : plan.index_table) {
        json je;
        je["bin"] = e.bin;
        je["seg_slot"] = e.seg_slot;
        je["image_slot"] = e.image_slot;
        je["mask_ref"] = e.mask_ref;
        je["sample_id"] = e.sample_id;
        je["token_offset"] = e.token_offset;
        j["index_table"].push_back(je);
    }
    const PackStats st = utilization(plan);
    j["stats"]["bins"] = st.bins;
    j["stats"]["total_tokens"] = st.total_tokens;
    j["stats"]["fill_ratio"] = st.fill_ratio;
    return j;
}

ProjectionConfig projection_config_from_json(const json& j) {
    ProjectionConfig cfg;
    try {
        if (j.contains("axis")) cfg.axis = axis_from_string(j["axis"].get<std::string>());
        if (j.contains("angle_deg")) cfg.angle_deg = j["angle_deg"].get<double>();
        if (j.contains("i0")) cfg.i0 = j["i0"].get<double>();
        if (j.contains("step_mm")) cfg.step_mm = j["step_mm"].get<double>();
    } catch (const json::exception& e) {
        throw Error("bad_config", std::string("bad projection config: ") + e.what());
    }
    return cfg;
}

namespace {

std::string require_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string())
        throw Error("bad_input_line", std::string("missing string field '") + key + "'");
    return j[key].get<std::string>();
}

std::uint64_t parse_hash_field(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        try {
            std::size_t used = 0;
            const std::uint64_t h = std::stoull(s, &used, 16);
            if (used == s.size()) return h;
        } catch (const std::exception&) {
        }
    }
    throw Error("bad_input_line", "hash fields must be hex strings or unsigned integers");
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct SplitOutput {
    std::vector<json> kept;
    std::vector<json> dropped;

    void add(json rec, bool keep, const std::string& reason) {
        rec["decision"] = keep ? "keep" : "drop";
        if (!keep) rec["reason"] = reason;
        (keep ? kept : dropped).push_back(std::move(rec));
    }
};

json finish_split(const fs::path& out, const fs::path& drop_log, SplitOutput&& so) {
    write_jsonl(out, so.kept);
    write_jsonl(drop_log, so.dropped);
    json stats;
    stats["kept"] = so.kept.size();
    stats["dropped"] = so.dropped.size();
    return stats;
}

}  // namespace

json curate_filter_files(const fs::path& input, const fs::path& out,
                         const fs::path& drop_log) {
    SplitOutput so;
    for (auto& rec : read_jsonl(input)) {
        bool keep = true;
        std::string reason;
        bool rule_seen = false;
        if (rec.contains("token_count")) {
            rule_seen = true;
            TextRecord tr;
            tr.token_count = rec["token_count"].get<long long>();
            const FilterDecision d = filter_text(tr);
            if (!d.keep && keep) {
                keep = false;
                reason = d.reason;
            }
        }
        if (rec.contains("width") && rec.contains("height")) {
            rule_seen = true;
            ImageMeta im;
            im.width = rec["width"].get<int>();
            im.height = rec["height"].get<int>();
            const FilterDecision d = filter_image(im);
            if (!d.keep && keep) {
                keep = false;
                reason = d.reason;
            }
        }
        if (!rule_seen)
            throw Error("bad_input_line",
                        "record needs token_count and/or width+height fields");
        so.add(std::move(rec), keep, reason);
    }
    return finish_split(out, drop_log, std::move(so));
}

json curate_dedup_files(const fs::path& input, const fs::path& out,
                        const fs::path& drop_log) {
    auto records = read_jsonl(input);
    std::vector<DedupRecord> dr;
    dr.reserve(records.size());
    for (auto& rec : records) {
        DedupRecord d;
        d.id = require_string(rec, "id");
        if (rec.contains("text_hash"))
            d.text_hash = parse_hash_field(rec["text_hash"]);
        else
            d.text_hash = fnv1a64(require_string(rec, "text"));
        if (rec.contains("image_hash")) {
            d.image_hash = parse_hash_field(rec["image_hash"]);
        } else if (rec.contains("image_path")) {
            const fs::path p = rec["image_path"].get<std::string>();
            std::ifstream in(p, std::ios::binary);
            if (!in) throw Error("unreadable_data", "cannot open image " + p.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            d.image_hash = fnv1a64(buf.str());
        }
        rec["text_hash"] = hex64(d.text_hash);
        if (d.image_hash) rec["image_hash"] = hex64(*d.image_hash);
        dr.push_back(std::move(d));
    }

    const DedupResult res = dedup(dr);
    const std::set<std::string> kept_ids(res.kept.begin(), res.kept.end());
    SplitOutput so;
    for (std::size_t i = 0; i < records.size(); ++i)
        so.add(std::move(records[i]), kept_ids.count(dr[i].id) > 0, "duplicate");
    return finish_split(out, drop_log, std::move(so));
}

json curate_tags_files(const fs::path& input, const fs::path& out,
                       const fs::path& drop_log) {
    SplitOutput so;
    for (auto& rec : read_jsonl(input)) {
        TagRecord t;
        t.modality = require_string(rec, "modality");
        t.task = require_string(rec, "task");
        t.region = require_string(rec, "region");
        const ValidationReport rep = validate_tags(t);
        std::string reason;
        if (!rep.passed()) {
            json failures = json::array();
            for (const auto& f : rep.failures) {
                if (!reason.empty()) reason += ",";
                reason += f.check_id;
                json jf;
                jf["check_id"] = f.check_id;
                jf["message"] = f.message;
                failures.push_back(jf);
            }
            rec["failures"] = failures;
        }
        so.add(std::move(rec), rep.passed(), reason);
    }
    return finish_split(out, drop_log, std::move(so));
}

json curate_cot_files(const fs::path& input, const fs::path& out,
                      const fs::path& drop_log) {
    SplitOutput so;
    for (auto& rec : read_jsonl(input)) {
        const std::string text = require_string(rec, "text");
        try {
            const CoTRecord parsed = parse_cot_record(text);
            json steps = json::array();
            for (const auto& st : parsed.think_steps) {
                json js;
                js["text"] = st.text;
                js["boxes"] = json::array();
                for (const auto& b : st.boxes) js["boxes"].push_back(box_to_json(b));
                steps.push_back(js);
            }
            rec["parsed"]["think_steps"] = steps;
            rec["parsed"]["answer"] = parsed.answer;
            so.add(std::move(rec), true, "");
        } catch (const Error& e) {
            so.add(std::move(rec), false, e.code());
        }
    }
    return finish_split(out, drop_log, std::move(so));
}

json pack_files(const fs::path& input, long long max_len, const fs::path& output) {
    std::vector<TokenSample> samples;
    for (const auto& rec : read_jsonl(input))
        samples.push_back(token_sample_from_json(rec));
    const PackPlan plan = pack_samples(samples, max_len);
    const json j = pack_plan_to_json(plan);
    write_json_file(output, j);
    json stats = j["stats"];
    stats["samples"] = samples.size();
    stats["seg_slots"] = plan.index_table.size();
    return stats;
}

json drr_files(const fs::path& volume_header,
               const std::optional<fs::path>& labels_header, const json& projection,
               const fs::path& out_prefix, bool invert) {
    const Volume3D vol = load_volume(volume_header);
    const ProjectionConfig cfg = projection_config_from_json(projection);
    const AttenuationVolume att = hu_to_attenuation(vol);
    const Radiograph r = project_at_angle(att, cfg);

    fs::path pgm = out_prefix;
    pgm += ".pgm";
    const fs::path dir = pgm.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    write_pgm(r, invert, pgm);

    json stats;
    stats["width"] = r.width;
    stats["height"] = r.height;
    stats["axis"] = to_string(cfg.axis);
    stats["angle_deg"] = cfg.angle_deg;
    stats["image"] = pgm.string();

    if (labels_header) {
        const Volume3D lv_raw = load_volume(*labels_header);
        if (lv_raw.header.dims != vol.header.dims)
            throw Error("dims_mismatch", "label volume dims differ from the CT volume");
        const LabelVolume3D lv = label_volume_from(lv_raw);
        const auto masks = project_labels(lv, cfg);
        const auto boxes = boxes_from_labels(masks);

        std::vector<json> mask_recs;
        for (const auto& [c, m] : masks) {
            json jm;
            jm["class_id"] = c;
            jm["rle"] = rle_to_json(rle_encode(m));
            mask_recs.push_back(jm);
        }
        fs::path masks_path = out_prefix;
        masks_path += "_masks.jsonl";
        write_jsonl(masks_path, mask_recs);

        std::vector<json> box_recs;
        for (const auto& b : boxes) box_recs.push_back(box_to_json(b));
        fs::path boxes_path = out_prefix;
        boxes_path += "_boxes.jsonl";
        write_jsonl(boxes_path, box_recs);

        stats["classes"] = masks.size();
        stats["boxes"] = boxes.size();
        stats["masks"] = masks_path.string();
        stats["boxes_file"] = boxes_path.string();
    }
    return stats;
}

namespace {

// Pairs pred and gold JSONL records by id. Gold ids must be unique; every
// gold id must have exactly one prediction and vice versa.
std::vector<std::pair<json, json>> pair_strict(const fs::path& pred_path,
                                               const fs::path& gold_path) {
    const auto preds = read_jsonl(pred_path);
    const auto golds = read_jsonl(gold_path);
    std::map<std::string, json> by_id;
    for (const auto& p : preds) {
        const std::string id = require_string(p, "id");
        if (!by_id.emplace(id, p).second)
            throw Error("id_mismatch", "duplicate prediction id '" + id + "'");
    }
    std::vector<std::pair<json, json>> out;
    std::set<std::string> gold_ids;
    for (const auto& g : golds) {
        const std::string id = require_string(g, "id");
        if (!gold_ids.insert(id).second)
            throw Error("id_mismatch", "duplicate gold id '" + id + "'");
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw Error("id_mismatch", "no prediction for id '" + id + "'");
        out.emplace_back(it->second, g);
        by_id.erase(it);
    }
    if (!by_id.empty())
        throw Error("id_mismatch",
                    "prediction id '" + by_id.begin()->first + "' has no gold record");
    return out;
}

// Lenient pairing for model outputs: gold ids drive the evaluation; a
// missing prediction scores as empty. Extra predictions are counted.
struct LenientPairs {
    std::vector<std::pair<std::optional<json>, json>> items;
    std::size_t missing = 0;
    std::size_t extra = 0;
};

LenientPairs pair_lenient(const fs::path& pred_path, const fs::path& gold_path) {
    const auto preds = read_jsonl(pred_path);
    const auto golds = read_jsonl(gold_path);
    std::map<std::string, json> by_id;
    for (const auto& p : preds) by_id[require_string(p, "id")] = p;
    LenientPairs out;
    std::set<std::string> gold_ids;
    for (const auto& g : golds) {
        const std::string id = require_string(g, "id");
        if (!gold_ids.insert(id).second)
            throw Error("id_mismatch", "duplicate gold id '" + id + "'");
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            ++out.missing;
            out.items.emplace_back(std::nullopt, g);
        } else {
            out.items.emplace_back(it->second, g);
            by_id.erase(it);
        }
    }
    out.extra = by_id.size();
    return out;
}

json prf_to_json(const PRF& p) {
    json j;
    j["precision"] = p.precision;
    j["recall"] = p.recall;
    j["f1"] = p.f1;
    return j;
}

json counts_to_json(const FieldCounts& c) {
    json j;
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    return j;
}

}  // namespace

json metrics_seg_files(const fs::path& pred, const fs::path& gold,
                       const fs::path& report) {
    const auto pairs = pair_strict(pred, gold);
    json items = json::array();
    double sum = 0.0;
    for (const auto& [p, g] : pairs) {
        const Mask2D pm = rle_decode(rle_from_json(p.at("rle")));
        const Mask2D gm = rle_decode(rle_from_json(g.at("rle")));
        const double dice = dice_coefficient(pm, gm);
        sum += dice;
        json it;
        it["id"] = p.at("id");
        it["dice"] = dice;
        items.push_back(it);
    }
    json rep;
    rep["items"] = items;
    rep["mean_dice"] = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
    rep["count"] = pairs.size();
    write_json_file(report, rep);
    json stats;
    stats["count"] = pairs.size();
    stats["mean_dice"] = rep["mean_dice"];
    return stats;
}

json metrics_det_files(const fs::path& pred, const fs::path& gold, double thresh,
                       const fs::path& report) {
    const auto pairs = pair_strict(pred, gold);
    json items = json::array();
    double sum = 0.0;
    long long matched_total = 0, pred_total = 0;
    for (const auto& [p, g] : pairs) {
        std::vector<LabeledBox> pb, gb;
        for (const auto& b : p.at("boxes")) pb.push_back(box_from_json(b));
        for (const auto& b : g.at("boxes")) gb.push_back(box_from_json(b));
        const double prec = precision_at_iou(pb, gb, thresh);
        sum += prec;
        matched_total += static_cast<long long>(std::lround(prec * pb.size()));
        pred_total += static_cast<long long>(pb.size());
        json it;
        it["id"] = p.at("id");
        it["precision"] = prec;
        it["predictions"] = pb.size();
        items.push_back(it);
    }
    json rep;
    rep["items"] = items;
    rep["iou_threshold"] = thresh;
    rep["mean_precision"] = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
    rep["pooled_precision"] =
        pred_total == 0 ? 0.0
                        : static_cast<double>(matched_total) / static_cast<double>(pred_total);
    rep["count"] = pairs.size();
    write_json_file(report, rep);
    json stats;
    stats["count"] = pairs.size();
    stats["mean_precision"] = rep["mean_precision"];
    return stats;
}

namespace {

std::string doc_text(const json& rec) {
    if (rec.contains("table_markdown")) return rec["table_markdown"].get<std::string>();
    return require_string(rec, "text");
}

}  // namespace

json eval_ltr_full_files(const fs::path& pred, const fs::path& gold,
                         const fs::path& report) {
    const LenientPairs pairs = pair_lenient(pred, gold);
    std::vector<DocScore> docs;
    json items = json::array();
    std::size_t pred_parse_failures = 0;
    for (const auto& [p, g] : pairs.items) {
        const LabTable gold_table = parse_markdown_table(doc_text(g));
        LabTable pred_table;
        if (p.has_value()) {
            try {
                pred_table = parse_markdown_table(doc_text(*p));
            } catch (const Error&) {
                ++pred_parse_failures;  // unparseable prediction scores empty
            }
        }
        const DocScore score = score_full_parse(pred_table, gold_table);
        docs.push_back(score);
        json it;
        it["id"] = g.at("id");
        it["counts"] = counts_to_json(score.total);
        it["f1"] = score.prf.f1;
        items.push_back(it);
    }
    const FieldScores agg = aggregate_scores(docs);
    json rep;
    rep["documents"] = docs.size();
    rep["micro"] = prf_to_json(agg.micro);
    rep["macro_doc_f1"] = agg.macro_doc_f1;
    json per_field;
    for (const auto& [f, prf] : agg.per_field) per_field[f] = prf_to_json(prf);
    rep["per_field"] = per_field;
    rep["counts"] = counts_to_json(agg.total);
    rep["items"] = items;
    rep["missing_predictions"] = pairs.missing;
    rep["extra_predictions"] = pairs.extra;
    rep["unparseable_predictions"] = pred_parse_failures;
    write_json_file(report, rep);

    json stats;
    stats["documents"] = docs.size();
    stats["micro_f1"] = agg.micro.f1;
    stats["macro_doc_f1"] = agg.macro_doc_f1;
    return stats;
}

json eval_ltr_simple_files(const fs::path& pred, const fs::path& gold,
                           const std::string& judge_command, const fs::path& report) {
    const LenientPairs pairs = pair_lenient(pred, gold);
    json items = json::array();
    long long correct = 0;
    for (const auto& [p, g] : pairs.items) {
        const std::string gold_text = require_string(g, "text");
        const std::string pred_text = p.has_value() ? require_string(*p, "text") : "";
        const int s = p.has_value() ? score_simple_qa(pred_text, gold_text, judge_command) : 0;
        correct += s;
        json it;
        it["id"] = g.at("id");
        it["score"] = s;
        items.push_back(it);
    }
    json rep;
    rep["items"] = items;
    rep["count"] = pairs.items.size();
    rep["accuracy"] = pairs.items.empty()
                          ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(pairs.items.size());
    rep["missing_predictions"] = pairs.missing;
    rep["extra_predictions"] = pairs.extra;
    write_json_file(report, rep);
    json stats;
    stats["count"] = pairs.items.size();
    stats["accuracy"] = rep["accuracy"];
    return stats;
}

json eval_ltr_complex_files(const fs::path& pred, const fs::path& gold,
                            const fs::path& report) {
    const LenientPairs pairs = pair_lenient(pred, gold);
    std::vector<DocScore> docs;
    json items = json::array();
    long long exact = 0;
    for (const auto& [p, g] : pairs.items) {
        ComplexItem pi, gi;
        gi.result = require_string(g, "result");
        gi.reference = require_string(g, "reference");
        gi.abnormal = require_string(g, "abnormal");
        if (p.has_value()) {
            pi.result = p->value("result", "");
            pi.reference = p->value("reference", "");
            pi.abnormal = p->value("abnormal", "");
        }
        const DocScore score = score_complex_qa(pi, gi);
        docs.push_back(score);
        if (score.total.fp == 0 && score.total.fn == 0) ++exact;
        json it;
        it["id"] = g.at("id");
        it["counts"] = counts_to_json(score.total);
        it["f1"] = score.prf.f1;
        items.push_back(it);
    }
    const FieldScores agg = aggregate_scores(docs);
    json rep;
    rep["items"] = items;
    rep["count"] = docs.size();
    rep["micro"] = prf_to_json(agg.micro);
    rep["macro_item_f1"] = agg.macro_doc_f1;
    json per_field;
    for (const auto& [f, prf] : agg.per_field) per_field[f] = prf_to_json(prf);
    rep["per_field"] = per_field;
    rep["exact_match"] = docs.empty()
                             ? 0.0
                             : static_cast<double>(exact) / static_cast<double>(docs.size());
    rep["missing_predictions"] = pairs.missing;
    rep["extra_predictions"] = pairs.extra;
    write_json_file(report, rep);
    json stats;
    stats["count"] = docs.size();
    stats["micro_f1"] = agg.micro.f1;
    return stats;
}

json eval_gmd_files(const fs::path& pred, const fs::path& gold,
                    const std::string& judge_command, const fs::path& report) {
    if (judge_command.empty())
        throw Error("bad_config", "gmd scoring requires a judge command");
    const LenientPairs pairs = pair_lenient(pred, gold);
    json items = json::array();
    double sum = 0.0;
    for (const auto& [p, g] : pairs.items) {
        json payload;
        payload["pred"] = p.has_value() ? require_string(*p, "text") : "";
        payload["gold"] = require_string(g, "text");
        const double s = invoke_judge(judge_command, payload.dump());
        sum += s;
        json it;
        it["id"] = g.at("id");
        it["score"] = s;
        items.push_back(it);
    }
    json rep;
    rep["items"] = items;
    rep["count"] = pairs.items.size();
    rep["mean_score"] =
        pairs.items.empty() ? 0.0 : sum / static_cast<double>(pairs.items.size());
    rep["missing_predictions"] = pairs.missing;
    rep["extra_predictions"] = pairs.extra;
    write_json_file(report, rep);
    json stats;
    stats["count"] = pairs.items.size();
    stats["mean_score"] = rep["mean_score"];
    return stats;
}

json eval_report_metrics_files(const fs::path& pred, const fs::path& gold,
                               const fs::path& report) {
    const LenientPairs pairs = pair_lenient(pred, gold);
    std::vector<std::vector<std::string>> cands, refs;
    json items = json::array();
    double rouge_sum = 0.0;
    for (const auto& [p, g] : pairs.items) {
        const auto ref = whitespace_tokenize(require_string(g, "text"));
        const auto cand =
            whitespace_tokenize(p.has_value() ? require_string(*p, "text") : "");
        const double r = rouge_l(cand, ref);
        rouge_sum += r;
        cands.push_back(cand);
        refs.push_back(ref);
        json it;
        it["id"] = g.at("id");
        it["rouge_l"] = r;
        items.push_back(it);
    }
    json rep;
    rep["items"] = items;
    rep["count"] = pairs.items.size();
    rep["rouge_l"] =
        pairs.items.empty() ? 0.0 : rouge_sum / static_cast<double>(pairs.items.size());
    rep["cider"] = pairs.items.empty() ? 0.0 : cider(cands, refs);
    rep["missing_predictions"] = pairs.missing;
    rep["extra_predictions"] = pairs.extra;
    write_json_file(report, rep);
    json stats;
    stats["count"] = pairs.items.size();
    stats["rouge_l"] = rep["rouge_l"];
    stats["cider"] = rep["cider"];
    return stats;
}

json eval_consensus_files(const fs::path& input, const fs::path& out) {
    std::vector<json> records = read_jsonl(input);
    std::map<std::string, long long> buckets = {{"Easy", 0}, {"Hard", 0}, {"Discard", 0}};
    for (auto& rec : records) {
        if (!rec.contains("agree_before") || !rec.contains("agree_after"))
            throw Error("bad_input_line", "records need agree_before and agree_after");
        const ConsensusBucket b = consensus_bucket(rec["agree_before"].get<bool>(),
                                                   rec["agree_after"].get<bool>());
        rec["bucket"] = to_string(b);
        ++buckets[to_string(b)];
    }
    write_jsonl(out, records);
    json stats;
    for (const auto& [k, v] : buckets) stats[k] = v;
    stats["count"] = records.size();
    return stats;
}

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path resolve_rel(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    if (path.is_absolute()) return path;
    return base / path;
}

struct StageResult {
    json stats;
    json outputs;
};

StageResult run_stage(const json& stage, const fs::path& base, const fs::path& out_dir) {
    const std::string type = stage.at("type").get<std::string>();
    const std::string name = stage.at("name").get<std::string>();

    auto input_path = [&](const char* key) {
        if (!stage.contains(key) || !stage[key].is_string())
            throw Error("bad_config", "stage needs a '" + std::string(key) + "' path");
        const fs::path p = resolve_rel(base, stage[key].get<std::string>());
        if (!fs::exists(p))
            throw Error("missing_input", "input '" + p.string() + "' does not exist");
        return p;
    };

    StageResult res;
    if (type == "filter" || type == "dedup" || type == "tags" || type == "cot") {
        const fs::path in = input_path("input");
        const fs::path kept = out_dir / (name + ".kept.jsonl");
        const fs::path dropped = out_dir / (name + ".dropped.jsonl");
        if (type == "filter") res.stats = curate_filter_files(in, kept, dropped);
        if (type == "dedup") res.stats = curate_dedup_files(in, kept, dropped);
        if (type == "tags") res.stats = curate_tags_files(in, kept, dropped);
        if (type == "cot") res.stats = curate_cot_files(in, kept, dropped);
        res.outputs["kept"] = kept.string();
        res.outputs["dropped"] = dropped.string();
    } else if (type == "pack") {
        const fs::path in = input_path("input");
        if (!stage.contains("max_len"))
            throw Error("bad_config", "pack stage needs max_len");
        const fs::path plan = out_dir / (name + ".plan.json");
        res.stats = pack_files(in, stage["max_len"].get<long long>(), plan);
        res.outputs["plan"] = plan.string();
    } else if (type == "drr") {
        const fs::path vol = input_path("volume");
        std::optional<fs::path> labels;
        if (stage.contains("labels")) labels = input_path("labels");
        const json proj = stage.value("projection", json::object());
        const bool invert = stage.value("invert", true);
        const fs::path prefix = out_dir / name;
        res.stats = drr_files(vol, labels, proj, prefix, invert);
        res.outputs["image"] = (out_dir / (name + ".pgm")).string();
        if (labels) {
            res.outputs["masks"] = (out_dir / (name + "_masks.jsonl")).string();
            res.outputs["boxes"] = (out_dir / (name + "_boxes.jsonl")).string();
        }
    } else if (type == "metrics") {
        const std::string kind = stage.value("kind", "seg");
        const fs::path p = input_path("pred");
        const fs::path g = input_path("gold");
        const fs::path rep = out_dir / (name + ".report.json");
        if (kind == "seg")
            res.stats = metrics_seg_files(p, g, rep);
        else if (kind == "det")
            res.stats = metrics_det_files(p, g, stage.value("iou", 0.5), rep);
        else
            throw Error("bad_config", "metrics kind must be seg or det");
        res.outputs["report"] = rep.string();
    } else if (type == "eval") {
        const std::string mode = stage.value("mode", "");
        const fs::path rep = out_dir / (name + ".report.json");
        if (mode == "consensus") {
            const fs::path in = input_path("input");
            const fs::path out = out_dir / (name + ".out.jsonl");
            res.stats = eval_consensus_files(in, out);
            res.outputs["out"] = out.string();
        } else {
            const fs::path p = input_path("pred");
            const fs::path g = input_path("gold");
            const std::string judge = stage.value("judge", "");
            if (mode == "ltr-full")
                res.stats = eval_ltr_full_files(p, g, rep);
            else if (mode == "ltr-simple")
                res.stats = eval_ltr_simple_files(p, g, judge, rep);
            else if (mode == "ltr-complex")
                res.stats = eval_ltr_complex_files(p, g, rep);
            else if (mode == "gmd")
                res.stats = eval_gmd_files(p, g, judge, rep);
            else if (mode == "report-metrics")
                res.stats = eval_report_metrics_files(p, g, rep);
            else
                throw Error("bad_config", "unknown eval mode '" + mode + "'");
            res.outputs["report"] = rep.string();
        }
    } else {
        throw Error("bad_config", "unknown stage type '" + type + "'");
    }
    return res;
}

}  // namespace

int run_pipeline(const fs::path& config_path, const fs::path& report_path) {
    json report;
    report["schema_version"] = kRunReportSchemaVersion;
    report["generated_at"] = utc_timestamp();
    report["stages"] = json::array();
    bool ok = true;

    try {
        const json cfg = read_json_file(config_path);
        const fs::path base =
            config_path.parent_path().empty() ? fs::path(".") : config_path.parent_path();
        const fs::path out_dir =
            resolve_rel(base, cfg.value("output_dir", std::string("out")));
        fs::create_directories(out_dir);
        report["seed"] = cfg.value("seed", 0LL);
        report["output_dir"] = out_dir.string();

        if (!cfg.contains("stages") || !cfg["stages"].is_array())
            throw Error("bad_config", "config needs a stages array");

        std::set<std::string> names;
        for (const auto& stage : cfg["stages"]) {
            if (!stage.contains("name") || !stage["name"].is_string() ||
                stage["name"].get<std::string>().empty())
                throw Error("bad_config", "every stage needs a non-empty name");
            if (!names.insert(stage["name"].get<std::string>()).second)
                throw Error("bad_config",
                            "duplicate stage name '" + stage["name"].get<std::string>() + "'");
            if (!stage.contains("type") || !stage["type"].is_string())
                throw Error("bad_config", "every stage needs a type");
        }

        bool failed = false;
        for (const auto& stage : cfg["stages"]) {
            json entry;
            entry["name"] = stage["name"];
            entry["type"] = stage["type"];
            if (failed) {
                entry["status"] = "skipped";
                report["stages"].push_back(entry);
                continue;
            }
            try {
                const StageResult res = run_stage(stage, base, out_dir);
                entry["status"] = "ok";
                entry["stats"] = res.stats;
                entry["outputs"] = res.outputs;
            } catch (const Error& e) {
                entry["status"] = "error";
                entry["error"]["code"] = e.code();
                entry["error"]["message"] = e.what();
                failed = true;
                ok = false;
            }
            report["stages"].push_back(entry);
        }
    } catch (const Error& e) {
        report["error"]["code"] = e.code();
        report["error"]["message"] = e.what();
        ok = false;
    }

    report["ok"] = ok;
    write_json_file(report_path, report);
    return ok ? 0 : 1;
}

}  // namespace medpipe
