#include "medpipe/curation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "medpipe/error.hpp"

namespace medpipe {

FilterDecision filter_text(const TextRecord& r) {
    if (r.token_count < kMinTokens) return {false, "too_short"};
    if (r.token_count > kMaxTokens) return {false, "too_long"};
    return {true, ""};
}

FilterDecision filter_image(const ImageMeta& m) {
    const long long area = static_cast<long long>(m.width) * m.height;
    if (area < kMinImagePixels) return {false, "too_small"};
    return {true, ""};
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

DedupResult dedup(const std::vector<DedupRecord>& records) {
    DedupResult out;
    std::set<std::uint64_t> text_seen;
    std::set<std::pair<std::uint64_t, std::uint64_t>> pair_seen;
    for (const auto& r : records) {
        bool fresh;
        if (r.image_hash.has_value())
            fresh = pair_seen.insert({r.text_hash, *r.image_hash}).second;
        else
            fresh = text_seen.insert(r.text_hash).second;
        (fresh ? out.kept : out.dropped).push_back(r.id);
    }
    return out;
}

const std::vector<std::string>& modality_vocabulary() {
    static const std::vector<std::string> v = {
        "Histopathology", "CT",  "X-Ray",      "MRI",        "NIR",
        "Ultrasound",     "Microscopy", "OCT", "Dermoscopy", "Photograph",
        "Endoscopy",      "Fundus",     "Other"};
    return v;
}

const std::vector<std::string>& task_vocabulary() {
    static const std::vector<std::string> v = {
        "Examination Selection", "Report Analysis",     "Prior Comparison",
        "Modality Recognition",  "Organ Recognition",   "Image Description",
        "Report Generation",     "Lesion Localization", "Differential Diagnosis",
        "Symptoms Inference",    "Treatment Generation", "Treatment Selection",
        "Treatment Details",     "Basic",               "Other"};
    return v;
}

const std::vector<std::string>& region_vocabulary() {
    static const std::vector<std::string> v = {
        "Abdomen",   "Chest",     "Brain",  "Neck",
        "Cell",      "Lower Limb", "Upper Limb", "Oral Cavity",
        "Eye",       "Breast",    "Gastrointestinal Tract", "Pelvis",
        "Foot",      "Joint",     "Other"};
    return v;
}

namespace {

bool contains(const std::vector<std::string>& vocab, const std::string& s) {
    return std::find(vocab.begin(), vocab.end(), s) != vocab.end();
}

}  // namespace

ValidationReport validate_tags(const TagRecord& t) {
    ValidationReport rep;
    if (!contains(modality_vocabulary(), t.modality))
        rep.fail("modality", "'" + t.modality + "' is not a known modality");
    if (!contains(task_vocabulary(), t.task))
        rep.fail("task", "'" + t.task + "' is not a known task");
    if (!contains(region_vocabulary(), t.region))
        rep.fail("region", "'" + t.region + "' is not a known region");
    return rep;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Extracts <bbox>...</bbox> spans, removes them from the text, returns the
// cleaned step text.
std::string extract_boxes(const std::string& step, std::vector<LabeledBox>* boxes) {
    static const std::string kOpen = "<bbox>", kClose = "</bbox>";
    std::string text;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = step.find(kOpen, pos);
        const std::size_t close = step.find(kClose, pos);
        if (open == std::string::npos) {
            if (close != std::string::npos)
                throw Error("bbox_malformed", "closing bbox tag without opener");
            text += step.substr(pos);
            break;
        }
        if (close == std::string::npos || close < open)
            throw Error("bbox_malformed", "unbalanced bbox tags");
        text += step.substr(pos, open - pos);
        const std::string payload =
            step.substr(open + kOpen.size(), close - open - kOpen.size());

        std::vector<long long> nums;
        std::string cur;
        for (const char ch : payload + ",") {
            if (ch == ',') {
                const std::string tok = trim(cur);
                cur.clear();
                if (tok.empty()) throw Error("bbox_malformed", "empty bbox coordinate");
                std::size_t consumed = 0;
                long long value = 0;
                try {
                    value = std::stoll(tok, &consumed);
                } catch (const std::exception&) {
                    throw Error("bbox_malformed", "non-numeric bbox coordinate '" + tok + "'");
                }
                if (consumed != tok.size())
                    throw Error("bbox_malformed", "non-numeric bbox coordinate '" + tok + "'");
                nums.push_back(value);
            } else {
                cur += ch;
            }
        }
        if (nums.size() != 4)
            throw Error("bbox_malformed", "bbox payload must have 4 coordinates");
        LabeledBox b;
        b.x_min = static_cast<int>(nums[0]);
        b.y_min = static_cast<int>(nums[1]);
        b.x_max = static_cast<int>(nums[2]);
        b.y_max = static_cast<int>(nums[3]);
        if (b.x_min > b.x_max || b.y_min > b.y_max)
            throw Error("degenerate_box", "bbox with inverted corners");
        boxes->push_back(b);
        pos = close + kClose.size();
    }
    return trim(text);
}

}  // namespace

CoTRecord parse_cot_record(const std::string& text) {
    static const std::string kThinkOpen = "<think>", kThinkClose = "</think>";
    static const std::string kAnsOpen = "<answer>", kAnsClose = "</answer>";

    const std::size_t think_open = text.find(kThinkOpen);
    if (think_open == std::string::npos)
        throw Error("missing_think", "record has no <think> block");
    if (!trim(text.substr(0, think_open)).empty())
        throw Error("malformed_record", "content before <think>");
    const std::size_t think_close = text.find(kThinkClose, think_open);
    if (think_close == std::string::npos)
        throw Error("missing_think", "unterminated <think> block");

    const std::size_t ans_open = text.find(kAnsOpen, think_close + kThinkClose.size());
    if (ans_open == std::string::npos)
        throw Error("missing_answer", "record has no <answer> block");
    if (!trim(text.substr(think_close + kThinkClose.size(),
                          ans_open - think_close - kThinkClose.size()))
             .empty())
        throw Error("malformed_record", "content between </think> and <answer>");
    const std::size_t ans_close = text.find(kAnsClose, ans_open);
    if (ans_close == std::string::npos)
        throw Error("missing_answer", "unterminated <answer> block");
    if (!trim(text.substr(ans_close + kAnsClose.size())).empty())
        throw Error("malformed_record", "content after </answer>");

    CoTRecord rec;
    const std::string think =
        text.substr(think_open + kThinkOpen.size(), think_close - think_open - kThinkOpen.size());
    std::istringstream lines(think);
    std::string line;
    while (std::getline(lines, line)) {
        ThinkStep step;
        step.text = extract_boxes(line, &step.boxes);
        if (step.text.empty() && step.boxes.empty()) continue;
        rec.think_steps.push_back(std::move(step));
    }
    if (rec.think_steps.empty())
        throw Error("empty_think", "think block has no steps");

    rec.answer = trim(text.substr(ans_open + kAnsOpen.size(), ans_close - ans_open - kAnsOpen.size()));
    if (rec.answer.empty()) throw Error("empty_answer", "answer is empty");
    return rec;
}

std::string serialize_cot_record(const CoTRecord& r) {
    std::string out = "<think>";
    for (std::size_t i = 0; i < r.think_steps.size(); ++i) {
        if (i > 0) out += "\n";
        const auto& step = r.think_steps[i];
        out += step.text;
        for (const auto& b : step.boxes) {
            if (!out.empty() && out.back() != '\n' && out.back() != '>') out += " ";
            out += "<bbox>" + std::to_string(b.x_min) + "," + std::to_string(b.y_min) +
                   "," + std::to_string(b.x_max) + "," + std::to_string(b.y_max) +
                   "</bbox>";
        }
    }
    out += "</think><answer>" + r.answer + "</answer>";
    return out;
}

}  // namespace medpipe
