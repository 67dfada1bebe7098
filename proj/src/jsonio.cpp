#include "medpipe/jsonio.hpp"

#include <fstream>

#include "medpipe/error.hpp"

namespace medpipe {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("unreadable_data", "cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw Error("bad_input_line", path.string() + " line " +
                                              std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("unreadable_data", "cannot write " + path.string());
    for (const auto& r : records) out << r.dump() << "\n";
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("unreadable_data", "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("bad_input_line", path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("unreadable_data", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace medpipe
