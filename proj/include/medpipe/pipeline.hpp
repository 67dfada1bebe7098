#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "medpipe/drr.hpp"
#include "medpipe/maskops.hpp"
#include "medpipe/packing.hpp"

namespace medpipe {

// JSON conversions shared by the CLI, the pipeline runner and the tests.
nlohmann::json rle_to_json(const RleMask& rle);
RleMask rle_from_json(const nlohmann::json& j);
nlohmann::json box_to_json(const LabeledBox& b);
LabeledBox box_from_json(const nlohmann::json& j);
TokenSample token_sample_from_json(const nlohmann::json& j);
nlohmann::json pack_plan_to_json(const PackPlan& plan);
ProjectionConfig projection_config_from_json(const nlohmann::json& j);

// File-level commands. Each reads JSON/JSONL inputs, writes its outputs and
// returns a stats object; failures raise Error. Curation commands write kept
// records (with decision/reason fields) to out and dropped ones to drop_log.
nlohmann::json curate_filter_files(const std::filesystem::path& input,
                                   const std::filesystem::path& out,
                                   const std::filesystem::path& drop_log);
nlohmann::json curate_dedup_files(const std::filesystem::path& input,
                                  const std::filesystem::path& out,
                                  const std::filesystem::path& drop_log);
nlohmann::json curate_tags_files(const std::filesystem::path& input,
                                 const std::filesystem::path& out,
                                 const std::filesystem::path& drop_log);
nlohmann::json curate_cot_files(const std::filesystem::path& input,
                                const std::filesystem::path& out,
                                const std::filesystem::path& drop_log);

nlohmann::json pack_files(const std::filesystem::path& input, long long max_len,
                          const std::filesystem::path& output);

// Writes <out_prefix>.pgm, <out_prefix>_masks.jsonl and
// <out_prefix>_boxes.jsonl (the last two only when a label volume is given).
nlohmann::json drr_files(const std::filesystem::path& volume_header,
                         const std::optional<std::filesystem::path>& labels_header,
                         const nlohmann::json& projection,
                         const std::filesystem::path& out_prefix, bool invert = true);

nlohmann::json metrics_seg_files(const std::filesystem::path& pred,
                                 const std::filesystem::path& gold,
                                 const std::filesystem::path& report);
nlohmann::json metrics_det_files(const std::filesystem::path& pred,
                                 const std::filesystem::path& gold, double thresh,
                                 const std::filesystem::path& report);

nlohmann::json eval_ltr_full_files(const std::filesystem::path& pred,
                                   const std::filesystem::path& gold,
                                   const std::filesystem::path& report);
nlohmann::json eval_ltr_simple_files(const std::filesystem::path& pred,
                                     const std::filesystem::path& gold,
                                     const std::string& judge_command,
                                     const std::filesystem::path& report);
nlohmann::json eval_ltr_complex_files(const std::filesystem::path& pred,
                                      const std::filesystem::path& gold,
                                      const std::filesystem::path& report);
nlohmann::json eval_gmd_files(const std::filesystem::path& pred,
                              const std::filesystem::path& gold,
                              const std::string& judge_command,
                              const std::filesystem::path& report);
nlohmann::json eval_report_metrics_files(const std::filesystem::path& pred,
                                         const std::filesystem::path& gold,
                                         const std::filesystem::path& report);
nlohmann::json eval_consensus_files(const std::filesystem::path& input,
                                    const std::filesystem::path& out);

inline constexpr int kRunReportSchemaVersion = 1;

// Executes the stages of a JSON pipeline config in order and writes a single
// run report (schema_version + one generated_at timestamp key + per-stage
// stats). Returns 0 iff the report contains no error entries.
int run_pipeline(const std::filesystem::path& config_path,
                 const std::filesystem::path& report_path);

}  // namespace medpipe
