#include "autocenet/dataset.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace autocenet {

std::uint64_t phantom_seed(std::uint64_t set_seed, std::size_t index) {
    return set_seed * 1000003ULL + static_cast<std::uint64_t>(index);
}

std::string case_id(std::size_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
    return "case_" + digits;
}

Dataset make_phantom_dataset(std::size_t count, std::uint64_t seed, const Dims3& dims, const Spacing3& spacing) {
    Dataset out;
    for (std::size_t i = 0; i < count; ++i) {
        auto ph = make_phantom(phantom_seed(seed, i), dims, spacing);
        out.push_back({case_id(i), window_normalize(ph.image), std::move(ph.label)});
    }
    return out;
}

void write_phantom_set(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed, const Dims3& dims,
                       const Spacing3& spacing) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "cases.csv");
    if (!manifest) throw DataError("cannot write " + (dir / "cases.csv").string());
    manifest << "id,image,label\n";
    for (std::size_t i = 0; i < count; ++i) {
        const auto id = case_id(i);
        auto ph = make_phantom(phantom_seed(seed, i), dims, spacing);
        write_volume(ph.image, dir / (id + "_image.vol"));
        write_volume(ph.label, dir / (id + "_label.vol"));
        manifest << id << ',' << id << "_image.vol," << id << "_label.vol\n";
    }
}

Dataset load_dataset(const std::filesystem::path& dir, const Dims3& dims) {
    const auto manifest_path = dir / "cases.csv";
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest " + manifest_path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,image,label", 0) != 0) {
        throw DataError(manifest_path.string() + ": expected header id,image,label");
    }
    Dataset out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, image, label;
        if (!std::getline(ss, id, ',') || !std::getline(ss, image, ',') || !std::getline(ss, label, ',')) {
            throw DataError(manifest_path.string() + ": malformed row '" + line + "'");
        }
        auto img = window_normalize(read_volume(dir / image));
        auto lab = read_label_volume(dir / label);
        require_same_dims(img, lab, ("case " + id).c_str());
        if (img.dims() != dims) {
            img = resample(img, dims);
            lab = resample(lab, dims);
        }
        out.push_back({id, std::move(img), std::move(lab)});
    }
    if (out.empty()) throw DataError(manifest_path.string() + " lists no cases");
    return out;
}

Dataset select_cases(const Dataset& all, const std::vector<std::string>& ids) {
    std::map<std::string, const Case*> by_id;
    for (const auto& c : all) by_id[c.id] = &c;
    Dataset out;
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("unknown case id '" + id + "'");
        out.push_back(*it->second);
    }
    return out;
}

std::vector<std::string> case_ids(const Dataset& data) {
    std::vector<std::string> out;
    for (const auto& c : data) out.push_back(c.id);
    return out;
}

}  // namespace autocenet
