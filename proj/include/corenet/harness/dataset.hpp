#ifndef CORENET_HARNESS_DATASET_HPP
#define CORENET_HARNESS_DATASET_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corenet/rng.hpp"
#include "corenet/tensornet/train.hpp"

namespace corenet::harness {

// Desk-scale tasks: generated 2D point sets of tunable difficulty plus CSV
// and IDX loaders for file-backed data. Generation is deterministic in the
// spec's own seed; train/test are disjoint and label-balanced.
struct DatasetSpec {
    std::string kind = "spirals";  // spirals | blobs | csv | idx
    size_t classes = 2;
    size_t samples_per_class = 100;
    double noise = 0.05;
    double difficulty = 1.0;       // spiral turns, or blob overlap in [0,1)
    double train_fraction = 0.8;
    uint64_t seed = 1;
    std::string path;              // csv: one file, label in the last column
    std::string idx_train_images, idx_train_labels;   // idx: standard pairs
    std::string idx_test_images, idx_test_labels;

    void validate() const {
        if (kind == "spirals" || kind == "blobs") {
            if (classes < 2) throw InvalidSpec("dataset needs >= 2 classes");
            if (samples_per_class < 4) throw InvalidSpec("need >= 4 samples per class");
            if (noise < 0.0) throw InvalidSpec("noise must be >= 0");
            if (train_fraction <= 0.0 || train_fraction >= 1.0)
                throw InvalidSpec("train fraction must be in (0, 1)");
            if (kind == "blobs" && (difficulty < 0.0 || difficulty >= 1.0))
                throw InvalidSpec("blob overlap must be in [0, 1)");
            if (kind == "spirals" && difficulty <= 0.0)
                throw InvalidSpec("spiral turns must be > 0");
        } else if (kind == "csv") {
            if (path.empty()) throw InvalidSpec("csv dataset needs a path");
            if (classes < 2) throw InvalidSpec("dataset needs >= 2 classes");
            if (train_fraction <= 0.0 || train_fraction >= 1.0)
                throw InvalidSpec("train fraction must be in (0, 1)");
        } else if (kind == "idx") {
            if (idx_train_images.empty() || idx_train_labels.empty() ||
                idx_test_images.empty() || idx_test_labels.empty())
                throw InvalidSpec("idx dataset needs all four file paths");
            if (classes < 2) throw InvalidSpec("dataset needs >= 2 classes");
        } else {
            throw InvalidSpec("unknown dataset kind '" + kind + "'");
        }
    }
};

struct Dataset {
    tensornet::DataSplit train;
    tensornet::DataSplit test;
    size_t classes = 0;
};

inline nlohmann::ordered_json dataset_spec_to_json(const DatasetSpec& s) {
    nlohmann::ordered_json j{{"kind", s.kind},
                             {"classes", s.classes},
                             {"samples_per_class", s.samples_per_class},
                             {"noise", s.noise},
                             {"difficulty", s.difficulty},
                             {"train_fraction", s.train_fraction},
                             {"seed", s.seed}};
    if (!s.path.empty()) j["path"] = s.path;
    if (!s.idx_train_images.empty()) {
        j["idx_train_images"] = s.idx_train_images;
        j["idx_train_labels"] = s.idx_train_labels;
        j["idx_test_images"] = s.idx_test_images;
        j["idx_test_labels"] = s.idx_test_labels;
    }
    return j;
}

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    try {
        DatasetSpec s;
        s.kind = j.value("kind", s.kind);
        s.classes = j.value("classes", s.classes);
        s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
        s.noise = j.value("noise", s.noise);
        s.difficulty = j.value("difficulty", s.difficulty);
        s.train_fraction = j.value("train_fraction", s.train_fraction);
        s.seed = j.value("seed", s.seed);
        s.path = j.value("path", s.path);
        s.idx_train_images = j.value("idx_train_images", s.idx_train_images);
        s.idx_train_labels = j.value("idx_train_labels", s.idx_train_labels);
        s.idx_test_images = j.value("idx_test_images", s.idx_test_images);
        s.idx_test_labels = j.value("idx_test_labels", s.idx_test_labels);
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed dataset spec: ") + e.what());
    }
}

namespace detail {

struct RawPoints {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

// Per-class shuffled split keeps both sides label-balanced.
inline Dataset split_and_standardize(RawPoints points, size_t classes, double train_fraction,
                                     SeededRng& rng, bool standardize) {
    std::vector<std::vector<size_t>> by_class(classes);
    for (size_t i = 0; i < points.y.size(); ++i) by_class[points.y[i]].push_back(i);

    std::vector<size_t> train_idx, test_idx;
    for (auto& members : by_class) {
        rng.shuffle(members);
        const size_t n_train =
            static_cast<size_t>(std::round(train_fraction * static_cast<double>(members.size())));
        if (n_train == 0 || n_train == members.size())
            throw InvalidSpec("split leaves an empty train or test side");
        train_idx.insert(train_idx.end(), members.begin(), members.begin() + n_train);
        test_idx.insert(test_idx.end(), members.begin() + n_train, members.end());
    }

    const size_t dims = points.x.front().size();
    std::vector<double> mean(dims, 0.0), stddev(dims, 1.0);
    if (standardize) {
        for (size_t i : train_idx)
            for (size_t d = 0; d < dims; ++d) mean[d] += points.x[i][d];
        for (double& m : mean) m /= static_cast<double>(train_idx.size());
        std::vector<double> var(dims, 0.0);
        for (size_t i : train_idx)
            for (size_t d = 0; d < dims; ++d) {
                const double diff = points.x[i][d] - mean[d];
                var[d] += diff * diff;
            }
        for (size_t d = 0; d < dims; ++d)
            stddev[d] = std::max(1e-12, std::sqrt(var[d] / static_cast<double>(train_idx.size())));
    }

    const auto make_split = [&](const std::vector<size_t>& idx) {
        tensornet::DataSplit split;
        split.x = tensornet::Tensor({idx.size(), dims});
        split.y.resize(idx.size());
        for (size_t r = 0; r < idx.size(); ++r) {
            for (size_t d = 0; d < dims; ++d)
                split.x.data[r * dims + d] =
                    standardize ? (points.x[idx[r]][d] - mean[d]) / stddev[d]
                                : points.x[idx[r]][d];
            split.y[r] = points.y[idx[r]];
        }
        return split;
    };

    Dataset ds;
    ds.train = make_split(train_idx);
    ds.test = make_split(test_idx);
    ds.classes = classes;
    return ds;
}

inline RawPoints make_spirals(const DatasetSpec& spec, SeededRng& rng) {
    RawPoints points;
    const size_t n = spec.samples_per_class;
    for (size_t c = 0; c < spec.classes; ++c) {
        for (size_t i = 0; i < n; ++i) {
            const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
            const double radius = 0.3 + 0.7 * t;
            const double theta =
                2.0 * 3.141592653589793 *
                (spec.difficulty * t + static_cast<double>(c) / static_cast<double>(spec.classes));
            points.x.push_back({radius * std::cos(theta) + spec.noise * rng.normal(),
                                radius * std::sin(theta) + spec.noise * rng.normal()});
            points.y.push_back(static_cast<int>(c));
        }
    }
    return points;
}

inline RawPoints make_blobs(const DatasetSpec& spec, SeededRng& rng) {
    RawPoints points;
    const double sigma = std::max(spec.noise, 1e-6);
    // adjacent centers are 10 sigma apart at overlap 0, 2 sigma at overlap 1
    const double spacing = sigma * (10.0 - 8.0 * spec.difficulty);
    const double radius = spacing / (2.0 * std::sin(3.141592653589793 /
                                                    static_cast<double>(spec.classes)));
    for (size_t c = 0; c < spec.classes; ++c) {
        const double angle =
            2.0 * 3.141592653589793 * static_cast<double>(c) / static_cast<double>(spec.classes);
        const double cx = radius * std::cos(angle);
        const double cy = radius * std::sin(angle);
        for (size_t i = 0; i < spec.samples_per_class; ++i) {
            points.x.push_back({cx + sigma * rng.normal(), cy + sigma * rng.normal()});
            points.y.push_back(static_cast<int>(c));
        }
    }
    return points;
}

inline RawPoints load_csv_points(const DatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw InvalidSpec("cannot open '" + spec.path + "'");
    RawPoints points;
    std::string line;
    size_t expected_cols = 0;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) {
            try {
                size_t consumed = 0;
                row.push_back(std::stod(cell, &consumed));
                if (consumed != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw InvalidSpec("csv line " + std::to_string(line_no) + ": bad number '" +
                                  cell + "'");
            }
        }
        if (row.size() < 2)
            throw InvalidSpec("csv line " + std::to_string(line_no) + ": need features + label");
        if (expected_cols == 0) expected_cols = row.size();
        if (row.size() != expected_cols)
            throw InvalidSpec("csv line " + std::to_string(line_no) + ": ragged row");
        const double label = row.back();
        row.pop_back();
        if (label != std::floor(label) || label < 0 ||
            label >= static_cast<double>(spec.classes))
            throw InvalidSpec("csv line " + std::to_string(line_no) + ": label out of range");
        points.x.push_back(std::move(row));
        points.y.push_back(static_cast<int>(label));
    }
    if (points.x.empty()) throw InvalidSpec("csv file '" + spec.path + "' has no rows");
    return points;
}

inline uint32_t read_be32(std::istream& in, const std::string& path) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("unexpected end of idx file '" + path + "'");
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

inline tensornet::Tensor load_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidSpec("cannot open '" + path + "'");
    const uint32_t magic = read_be32(in, path);
    if (magic != 2051) throw InvalidSpec("'" + path + "' is not an idx3-ubyte image file");
    const uint32_t n = read_be32(in, path);
    const uint32_t h = read_be32(in, path);
    const uint32_t w = read_be32(in, path);
    tensornet::Tensor images({n, 1, h, w});
    std::vector<uint8_t> raw(static_cast<size_t>(n) * h * w);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("unexpected end of idx file '" + path + "'");
    for (size_t i = 0; i < raw.size(); ++i)
        images.data[i] = static_cast<double>(raw[i]) / 255.0;
    return images;
}

inline std::vector<int> load_idx_labels(const std::string& path, size_t classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidSpec("cannot open '" + path + "'");
    const uint32_t magic = read_be32(in, path);
    if (magic != 2049) throw InvalidSpec("'" + path + "' is not an idx1-ubyte label file");
    const uint32_t n = read_be32(in, path);
    std::vector<uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("unexpected end of idx file '" + path + "'");
    std::vector<int> labels(n);
    for (size_t i = 0; i < n; ++i) {
        if (raw[i] >= classes) throw InvalidSpec("idx label out of range in '" + path + "'");
        labels[i] = raw[i];
    }
    return labels;
}

}  // namespace detail

inline Dataset gen_dataset(const DatasetSpec& spec) {
    spec.validate();
    auto rng = SeededRng::derive(spec.seed, "dataset/" + spec.kind);

    if (spec.kind == "spirals" || spec.kind == "blobs") {
        auto points = spec.kind == "spirals" ? detail::make_spirals(spec, rng)
                                             : detail::make_blobs(spec, rng);
        return detail::split_and_standardize(std::move(points), spec.classes,
                                             spec.train_fraction, rng, true);
    }
    if (spec.kind == "csv") {
        auto points = detail::load_csv_points(spec);
        return detail::split_and_standardize(std::move(points), spec.classes,
                                             spec.train_fraction, rng, true);
    }
    // idx: pre-split files, scaled to [0,1], no re-shuffling
    Dataset ds;
    ds.train.x = detail::load_idx_images(spec.idx_train_images);
    ds.train.y = detail::load_idx_labels(spec.idx_train_labels, spec.classes);
    ds.test.x = detail::load_idx_images(spec.idx_test_images);
    ds.test.y = detail::load_idx_labels(spec.idx_test_labels, spec.classes);
    ds.classes = spec.classes;
    ds.train.validate();
    ds.test.validate();
    return ds;
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_DATASET_HPP
