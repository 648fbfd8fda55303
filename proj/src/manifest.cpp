#include "tmr/dataset/manifest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>
#include <unordered_set>

using nlohmann::json;

namespace tmr::dataset {

std::string to_string(TypeLabel t) {
    switch (t) {
        case TypeLabel::TEXT_ONLY: return "TEXT_ONLY";
        case TypeLabel::FIGURE_ONLY: return "FIGURE_ONLY";
        case TypeLabel::FIGURE_AND_TEXT: return "FIGURE_AND_TEXT";
    }
    throw std::logic_error("bad TypeLabel");
}

TypeLabel type_label_from_string(const std::string& s) {
    if (s == "TEXT_ONLY") return TypeLabel::TEXT_ONLY;
    if (s == "FIGURE_ONLY") return TypeLabel::FIGURE_ONLY;
    if (s == "FIGURE_AND_TEXT") return TypeLabel::FIGURE_AND_TEXT;
    throw std::invalid_argument("unknown type label: " + s);
}

std::string to_string(Purpose p) {
    switch (p) {
        case Purpose::CATALOG: return "CATALOG";
        case Purpose::PTL: return "PTL";
        case Purpose::TT: return "TT";
        case Purpose::EVAL: return "EVAL";
    }
    throw std::logic_error("bad Purpose");
}

Purpose purpose_from_string(const std::string& s) {
    if (s == "CATALOG") return Purpose::CATALOG;
    if (s == "PTL") return Purpose::PTL;
    if (s == "TT") return Purpose::TT;
    if (s == "EVAL") return Purpose::EVAL;
    throw std::invalid_argument("unknown manifest purpose: " + s);
}

void DatasetManifest::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
        if (r.id.empty()) throw std::invalid_argument("manifest record with empty id");
        if (!seen.insert(r.id).second) throw std::invalid_argument("duplicate manifest id: " + r.id);
        if (purpose == Purpose::PTL && !r.mask_path) {
            throw std::invalid_argument("PTL record without mask: " + r.id);
        }
        if (purpose == Purpose::TT && !r.type_label) {
            throw std::invalid_argument("TT record without type label: " + r.id);
        }
        if (purpose == Purpose::EVAL && r.relevant_ids && r.relevant_ids->empty()) {
            throw std::invalid_argument("EVAL query with empty relevant set: " + r.id);
        }
    }
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& file) {
    m.validate();
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot write manifest: " + file.string());
    json header = {{"manifest", 1}, {"purpose", to_string(m.purpose)}};
    os << header.dump() << "\n";
    for (const auto& r : m.records) {
        json j = {{"id", r.id}, {"path", r.path}};
        if (r.mask_path) j["mask_path"] = *r.mask_path;
        if (r.type_label) j["type_label"] = to_string(*r.type_label);
        if (r.relevant_ids) j["relevant_ids"] = *r.relevant_ids;
        os << j.dump() << "\n";
    }
    if (!os) throw std::runtime_error("short manifest write: " + file.string());
}

DatasetManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open manifest: " + file.string());
    DatasetManifest m;
    m.base_dir = std::filesystem::absolute(file).parent_path();
    std::string line;
    bool saw_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (!saw_header) {
            if (!j.contains("manifest")) throw std::runtime_error("manifest missing header line: " + file.string());
            m.purpose = purpose_from_string(j.at("purpose").get<std::string>());
            saw_header = true;
            continue;
        }
        ImageRecord r;
        r.id = j.at("id").get<std::string>();
        r.path = j.at("path").get<std::string>();
        if (j.contains("mask_path")) r.mask_path = j["mask_path"].get<std::string>();
        if (j.contains("type_label")) r.type_label = type_label_from_string(j["type_label"].get<std::string>());
        if (j.contains("relevant_ids")) r.relevant_ids = j["relevant_ids"].get<std::set<std::string>>();
        m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
}

}  // namespace tmr::dataset
