#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace chemflood {

/// CSV output with a versioned schema header.  All numbers are written in
/// round-trip-exact decimal so reruns are byte-identical.
class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns);

    void row(const std::vector<double>& values);
    void raw_row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }
    void close();

private:
    std::string path_;
    std::ofstream out_;
    size_t ncols_ = 0;
};

/// Reproducibility record written next to every command's outputs: the tool
/// version, the exact inputs (model file and its content hash, all effective
/// parameters), and a content hash per output file.
struct RunManifest {
    std::string tool_version;
    std::string subcommand;
    std::string model_path;
    std::string model_hash;
    std::map<std::string, std::string> params;  ///< sorted by construction
    std::vector<std::pair<std::string, std::string>> outputs;  ///< (path, content hash)
};

/// Hash a finished output file and record it.
void record_output(RunManifest& man, const std::string& path);

/// Serialize the manifest as stable, key-sorted JSON.
void write_manifest(const RunManifest& man, const std::string& path);

}  // namespace chemflood
