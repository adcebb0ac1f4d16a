#include "dcobench/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace dcobench {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'O', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }
    template <typename T>
    void put(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <typename T>
    void put_span(const T* p, std::size_t n) {
        out_.write(reinterpret_cast<const char*>(p), n * sizeof(T));
    }
    void header(std::uint32_t dim, SidecarKind kind) {
        out_.write(kMagic, 4);
        put(kVersion);
        put(dim);
        put(static_cast<std::uint8_t>(kind));
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + path);
    }
    template <typename T>
    T get() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw std::runtime_error("truncated file: " + path_);
        return v;
    }
    template <typename T>
    void get_span(T* p, std::size_t n) {
        in_.read(reinterpret_cast<char*>(p), n * sizeof(T));
        if (!in_) throw std::runtime_error("truncated file: " + path_);
    }
    std::uint32_t header(SidecarKind expect) {
        char magic[4];
        in_.read(magic, 4);
        if (!in_ || std::memcmp(magic, kMagic, 4) != 0) {
            throw std::runtime_error("bad sidecar magic: " + path_);
        }
        const auto ver = get<std::uint32_t>();
        if (ver != kVersion) throw std::runtime_error("unsupported sidecar version");
        const auto dim = get<std::uint32_t>();
        const auto kind = get<std::uint8_t>();
        if (kind != static_cast<std::uint8_t>(expect)) {
            throw std::runtime_error("sidecar kind mismatch in " + path_);
        }
        return dim;
    }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace

// ---------------------------------------------------------------------------
// fvecs / ivecs

Dataset read_fvecs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<float> data;
    std::int32_t dim = -1;
    std::size_t record = 0;
    while (true) {
        std::int32_t d;
        in.read(reinterpret_cast<char*>(&d), 4);
        if (in.eof()) break;
        if (!in) throw std::runtime_error(path + ": truncated header at record " +
                                          std::to_string(record));
        if (d <= 0) throw std::runtime_error(path + ": non-positive dimension at record " +
                                             std::to_string(record));
        if (dim < 0) dim = d;
        if (d != dim) {
            throw std::runtime_error(path + ": dimension mismatch at record " +
                                     std::to_string(record) + " (got " + std::to_string(d) +
                                     ", expected " + std::to_string(dim) + ")");
        }
        const std::size_t off = data.size();
        data.resize(off + d);
        in.read(reinterpret_cast<char*>(data.data() + off), 4l * d);
        if (!in) throw std::runtime_error(path + ": truncated payload at record " +
                                          std::to_string(record));
        for (std::int32_t j = 0; j < d; ++j) {
            if (!std::isfinite(data[off + j])) {
                throw std::runtime_error(path + ": non-finite value at record " +
                                         std::to_string(record) + " dim " + std::to_string(j));
            }
        }
        ++record;
    }
    if (record == 0) throw std::runtime_error(path + ": empty fvecs file");
    return Dataset(static_cast<std::size_t>(dim), std::move(data));
}

void write_fvecs(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const auto d = static_cast<std::int32_t>(ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(ds.ptr(i)), 4l * d);
    }
}

std::vector<std::vector<std::uint32_t>> read_ivecs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<std::uint32_t>> rows;
    std::int32_t dim = -1;
    while (true) {
        std::int32_t d;
        in.read(reinterpret_cast<char*>(&d), 4);
        if (in.eof()) break;
        if (!in || d <= 0) {
            throw std::runtime_error(path + ": bad record header at record " +
                                     std::to_string(rows.size()));
        }
        if (dim < 0) dim = d;
        if (d != dim) {
            throw std::runtime_error(path + ": dimension mismatch at record " +
                                     std::to_string(rows.size()));
        }
        std::vector<std::uint32_t> row(d);
        in.read(reinterpret_cast<char*>(row.data()), 4l * d);
        if (!in) throw std::runtime_error(path + ": truncated payload at record " +
                                          std::to_string(rows.size()));
        rows.push_back(std::move(row));
    }
    return rows;  // empty file yields empty truth
}

void write_ivecs(const std::vector<std::vector<std::uint32_t>>& rows,
                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& row : rows) {
        const auto d = static_cast<std::int32_t>(row.size());
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(row.data()), 4l * d);
    }
}

// ---------------------------------------------------------------------------
// synthetic generators

Dataset gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n == 0 || spec.dim == 0) {
        throw std::invalid_argument("synthetic spec: N and D must be >= 1");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<float> gauss(0.f, 1.f);

    switch (spec.kind) {
        case SyntheticKind::IsotropicGaussian: {
            std::vector<float> data(spec.n * spec.dim);
            for (auto& v : data) v = gauss(rng);
            return Dataset(spec.dim, std::move(data));
        }
        case SyntheticKind::LowRank: {
            if (spec.rank == 0 || spec.rank > spec.dim) {
                throw std::invalid_argument("synthetic spec: rank must be in [1, D]");
            }
            // x = A z + small isotropic noise; variance concentrates in the
            // leading r principal components
            std::vector<float> mix(spec.rank * spec.dim);
            for (auto& v : mix) v = gauss(rng);
            std::vector<float> data(spec.n * spec.dim);
            std::vector<float> z(spec.rank);
            const float noise = 0.01f;
            for (std::size_t i = 0; i < spec.n; ++i) {
                for (auto& v : z) v = gauss(rng);
                float* row = data.data() + i * spec.dim;
                for (std::size_t j = 0; j < spec.dim; ++j) {
                    float s = 0.f;
                    for (std::size_t r = 0; r < spec.rank; ++r) {
                        s += z[r] * mix[r * spec.dim + j];
                    }
                    row[j] = s + noise * gauss(rng);
                }
            }
            return Dataset(spec.dim, std::move(data));
        }
        case SyntheticKind::ConcatTokens: {
            Dataset src = read_fvecs(spec.source);
            if (spec.dim % src.dim() != 0) {
                throw std::invalid_argument(
                    "synthetic spec: target D must be a multiple of the token dimension");
            }
            const std::size_t per = spec.dim / src.dim();
            std::uniform_int_distribution<std::size_t> pick(0, src.size() - 1);
            std::vector<float> data;
            data.reserve(spec.n * spec.dim);
            std::size_t cursor = pick(rng);
            for (std::size_t i = 0; i < spec.n; ++i) {
                for (std::size_t t = 0; t < per; ++t) {
                    const auto v = src[cursor];
                    data.insert(data.end(), v.begin(), v.end());
                    cursor = (cursor + 1) % src.size();
                }
            }
            return Dataset(spec.dim, std::move(data));
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// sidecar persistence

void save_pca(const PcaModel& m, const std::string& path) {
    Writer w(path);
    w.header(static_cast<std::uint32_t>(m.dim), SidecarKind::Pca);
    w.put_span(m.mean.data(), m.dim);
    w.put_span(m.rot.data(), m.dim * m.dim);
    w.put_span(m.eigenvalues.data(), m.dim);
}

PcaModel load_pca(const std::string& path) {
    Reader r(path);
    const std::uint32_t dim = r.header(SidecarKind::Pca);
    PcaModel m;
    m.dim = dim;
    m.mean.resize(dim);
    m.rot.resize(static_cast<std::size_t>(dim) * dim);
    m.eigenvalues.resize(dim);
    r.get_span(m.mean.data(), dim);
    r.get_span(m.rot.data(), m.rot.size());
    r.get_span(m.eigenvalues.data(), dim);
    m.finalize();
    return m;
}

void save_ortho(const OrthoProjection& p, const std::string& path) {
    Writer w(path);
    w.header(static_cast<std::uint32_t>(p.dim), SidecarKind::Ortho);
    w.put(p.seed);
    w.put_span(p.rot.data(), p.dim * p.dim);
}

OrthoProjection load_ortho(const std::string& path) {
    Reader r(path);
    const std::uint32_t dim = r.header(SidecarKind::Ortho);
    OrthoProjection p;
    p.dim = dim;
    p.seed = r.get<std::uint64_t>();
    p.rot.resize(static_cast<std::size_t>(dim) * dim);
    r.get_span(p.rot.data(), p.rot.size());
    return p;
}

void save_codebook(const PqCodebook& cb, const std::string& path) {
    Writer w(path);
    w.header(static_cast<std::uint32_t>(cb.dim), SidecarKind::Pq);
    w.put(static_cast<std::uint32_t>(cb.c));
    w.put(static_cast<std::uint32_t>(cb.b));
    w.put(cb.trained_on);
    w.put(cb.train_mse);
    w.put_span(cb.centroids.data(), cb.centroids.size());
}

PqCodebook load_codebook(const std::string& path) {
    Reader r(path);
    const std::uint32_t dim = r.header(SidecarKind::Pq);
    PqCodebook cb;
    cb.dim = dim;
    cb.c = r.get<std::uint32_t>();
    cb.b = r.get<std::uint32_t>();
    cb.trained_on = r.get<std::uint64_t>();
    cb.train_mse = r.get<float>();
    cb.sub_dim = cb.dim / cb.c;
    cb.centroids.resize(cb.c * cb.ncentroids() * cb.sub_dim);
    r.get_span(cb.centroids.data(), cb.centroids.size());
    return cb;
}

void save_hnsw(const HnswIndex& idx, const std::string& path) {
    Writer w(path);
    w.header(static_cast<std::uint32_t>(idx.dim_), SidecarKind::Hnsw);
    w.put(static_cast<std::uint32_t>(idx.params_.M));
    w.put(static_cast<std::uint32_t>(idx.params_.ef_construction));
    w.put(idx.params_.seed);
    w.put(static_cast<std::uint64_t>(idx.levels_.size()));
    w.put(idx.entry_);
    w.put(static_cast<std::int32_t>(idx.max_level_));
    for (std::size_t i = 0; i < idx.levels_.size(); ++i) {
        w.put(static_cast<std::int32_t>(idx.levels_[i]));
        for (const auto& links : idx.nodes_[i].links) {
            w.put(static_cast<std::uint32_t>(links.size()));
            w.put_span(links.data(), links.size());
        }
    }
}

HnswIndex load_hnsw(const std::string& path) {
    Reader r(path);
    const std::uint32_t dim = r.header(SidecarKind::Hnsw);
    HnswParams params;
    params.M = r.get<std::uint32_t>();
    params.ef_construction = r.get<std::uint32_t>();
    params.seed = r.get<std::uint64_t>();
    HnswIndex idx(dim, params);
    const auto n = r.get<std::uint64_t>();
    idx.entry_ = r.get<std::uint32_t>();
    idx.max_level_ = r.get<std::int32_t>();
    idx.levels_.resize(n);
    idx.nodes_.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        idx.levels_[i] = r.get<std::int32_t>();
        idx.nodes_[i].links.resize(idx.levels_[i] + 1);
        for (auto& links : idx.nodes_[i].links) {
            links.resize(r.get<std::uint32_t>());
            r.get_span(links.data(), links.size());
        }
    }
    return idx;
}

void save_ivf(const IvfIndex& idx, const std::string& path) {
    Writer w(path);
    w.header(static_cast<std::uint32_t>(idx.dim), SidecarKind::Ivf);
    w.put(static_cast<std::uint32_t>(idx.nlist));
    w.put_span(idx.centroids.data(), idx.centroids.size());
    w.put_span(idx.offsets.data(), idx.offsets.size());
    w.put(static_cast<std::uint64_t>(idx.ids.size()));
    w.put_span(idx.ids.data(), idx.ids.size());
}

IvfIndex load_ivf(const std::string& path) {
    Reader r(path);
    const std::uint32_t dim = r.header(SidecarKind::Ivf);
    IvfIndex idx;
    idx.dim = dim;
    idx.nlist = r.get<std::uint32_t>();
    idx.centroids.resize(idx.nlist * dim);
    r.get_span(idx.centroids.data(), idx.centroids.size());
    idx.offsets.resize(idx.nlist + 1);
    r.get_span(idx.offsets.data(), idx.offsets.size());
    idx.ids.resize(r.get<std::uint64_t>());
    r.get_span(idx.ids.data(), idx.ids.size());
    return idx;
}

void save_models(const std::vector<LinearModel>& models,
                 const std::vector<std::string>& feature_names, std::size_t dim,
                 const std::string& prefix) {
    std::ofstream man(prefix + ".manifest");
    if (!man) throw std::runtime_error("cannot open for writing: " + prefix + ".manifest");
    man << "features";
    for (const auto& f : feature_names) man << " " << f;
    man << "\n";
    for (const auto& m : models) {
        man << "model k=" << m.trained_k << " d=" << m.trained_d
            << " nfeat=" << m.weights.size() << "\n";
    }

    Writer w(prefix + ".weights");
    w.header(static_cast<std::uint32_t>(dim), SidecarKind::Models);
    w.put(static_cast<std::uint32_t>(models.size()));
    for (const auto& m : models) {
        w.put(m.trained_k);
        w.put(m.trained_d);
        w.put(static_cast<std::uint32_t>(m.weights.size()));
        w.put_span(m.weights.data(), m.weights.size());
        w.put(m.bias);
        w.put(m.held_out_accuracy);
        w.put(m.held_out_false_reject);
    }
}

std::vector<LinearModel> load_models(const std::string& prefix) {
    Reader r(prefix + ".weights");
    r.header(SidecarKind::Models);
    const auto count = r.get<std::uint32_t>();
    std::vector<LinearModel> out(count);
    for (auto& m : out) {
        m.trained_k = r.get<std::uint32_t>();
        m.trained_d = r.get<std::int32_t>();
        m.weights.resize(r.get<std::uint32_t>());
        r.get_span(m.weights.data(), m.weights.size());
        m.bias = r.get<float>();
        m.held_out_accuracy = r.get<float>();
        m.held_out_false_reject = r.get<float>();
    }
    return out;
}

}  // namespace dcobench
