#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tmr::dataset {

enum class TypeLabel { TEXT_ONLY = 0, FIGURE_ONLY = 1, FIGURE_AND_TEXT = 2 };

std::string to_string(TypeLabel t);
TypeLabel type_label_from_string(const std::string& s);

enum class Purpose { CATALOG, PTL, TT, EVAL };

std::string to_string(Purpose p);
Purpose purpose_from_string(const std::string& s);

/// One catalog entry. Paths are stored relative to the manifest file and
/// resolved against its directory on load.
struct ImageRecord {
    std::string id;
    std::string path;
    std::optional<std::string> mask_path;
    std::optional<TypeLabel> type_label;
    std::optional<std::set<std::string>> relevant_ids;
};

struct DatasetManifest {
    Purpose purpose = Purpose::CATALOG;
    std::vector<ImageRecord> records;
    /// Directory paths resolve against; set on load/save.
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }

    /// Throws std::invalid_argument on duplicate ids or purpose-specific
    /// field violations (PTL records need masks, EVAL queries need
    /// non-empty relevant id sets, TT records need type labels).
    void validate() const;
};

/// UTF-8, one JSON record per line; first line is a header object carrying
/// the manifest purpose.
void save_manifest(const DatasetManifest& m, const std::filesystem::path& file);
DatasetManifest load_manifest(const std::filesystem::path& file);

}  // namespace tmr::dataset
