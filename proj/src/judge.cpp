#include "medpipe/judge.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>

#include "json.hpp"

#include "medpipe/error.hpp"

namespace medpipe {

namespace fs = std::filesystem;

double invoke_judge(const std::string& command, const std::string& payload_json) {
    if (command.empty()) throw Error("judge_failed", "no judge command configured");

    static std::atomic<unsigned> counter{0};
    const fs::path tmp =
        fs::temp_directory_path() /
        ("medpipe_judge_" + std::to_string(::getpid()) + "_" +
         std::to_string(counter.fetch_add(1)) + ".json");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("judge_failed", "cannot stage judge input");
        out << payload_json;
    }

    const std::string full = command + " < '" + tmp.string() + "'";
    FILE* pipe = ::popen(full.c_str(), "r");
    if (!pipe) {
        fs::remove(tmp);
        throw Error("judge_failed", "cannot launch judge command");
    }
    std::string output;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
    const int status = ::pclose(pipe);
    fs::remove(tmp);

    if (status != 0)
        throw Error("judge_failed", "judge exited with status " + std::to_string(status));

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(output);
    } catch (const nlohmann::json::exception&) {
        throw Error("judge_failed", "judge output is not valid JSON");
    }
    if (!j.is_object() || !j.contains("score") || !j["score"].is_number())
        throw Error("judge_failed", "judge output must be {\"score\": number}");
    const double score = j["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0))
        throw Error("judge_failed", "judge score must lie in [0, 1]");
    return score;
}

}  // namespace medpipe
