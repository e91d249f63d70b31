#include "chemflood/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>

#include "chemflood/numerics.hpp"

namespace chemflood {

CsvFile::CsvFile(const std::string& path, const std::string& schema,
                 const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), ncols_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
    out_ << "# schema: " << schema << "\n";
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
}

void CsvFile::row(const std::vector<double>& values) {
    if (values.size() != ncols_)
        throw std::runtime_error("csv row width mismatch in " + path_);
    for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt17(values[i]);
    out_ << "\n";
}

void CsvFile::raw_row(const std::vector<std::string>& cells) {
    if (cells.size() != ncols_)
        throw std::runtime_error("csv row width mismatch in " + path_);
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

void CsvFile::close() {
    if (out_.is_open()) out_.close();
}

void record_output(RunManifest& man, const std::string& path) {
    // Store only the file name: the record should not depend on where the
    // output directory happens to live.
    const std::string name = std::filesystem::path(path).filename().string();
    man.outputs.emplace_back(name, hex64(fnv1a64_file(path)));
}

void write_manifest(const RunManifest& man, const std::string& path) {
    nlohmann::ordered_json j;
    j["tool_version"] = man.tool_version;
    j["subcommand"] = man.subcommand;
    j["model"] = {{"path", man.model_path}, {"hash", man.model_hash}};
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : man.params) params[k] = v;  // std::map is key-sorted
    j["params"] = params;
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const auto& [p, h] : man.outputs) outs.push_back({{"path", p}, {"hash", h}});
    j["outputs"] = outs;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace chemflood
