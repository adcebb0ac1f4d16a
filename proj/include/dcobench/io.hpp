#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcobench/core.hpp"
#include "dcobench/dco.hpp"
#include "dcobench/index.hpp"
#include "dcobench/quantize.hpp"
#include "dcobench/transform.hpp"

namespace dcobench {

// fvecs/ivecs: per record a little-endian i32 dimension then the payload.
Dataset read_fvecs(const std::string& path);
void write_fvecs(const Dataset& ds, const std::string& path);
std::vector<std::vector<std::uint32_t>> read_ivecs(const std::string& path);
void write_ivecs(const std::vector<std::vector<std::uint32_t>>& rows,
                 const std::string& path);

enum class SyntheticKind { IsotropicGaussian, LowRank, ConcatTokens };

struct SyntheticSpec {
    std::size_t n = 0;
    std::size_t dim = 0;
    SyntheticKind kind = SyntheticKind::IsotropicGaussian;
    std::size_t rank = 0;       // LowRank only
    std::string source;         // ConcatTokens: path of token-level fvecs
    std::uint64_t seed = 42;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

// Binary sidecar: magic "DCOK", u32 version, u32 D, u8 kind, then payload.
// Byte-exact round trips.
enum class SidecarKind : std::uint8_t {
    Pca = 1, Ortho = 2, Pq = 3, Hnsw = 4, Ivf = 5, Models = 6,
};

void save_pca(const PcaModel& m, const std::string& path);
PcaModel load_pca(const std::string& path);
void save_ortho(const OrthoProjection& p, const std::string& path);
OrthoProjection load_ortho(const std::string& path);
void save_codebook(const PqCodebook& cb, const std::string& path);
PqCodebook load_codebook(const std::string& path);

void save_hnsw(const HnswIndex& idx, const std::string& path);
HnswIndex load_hnsw(const std::string& path);
void save_ivf(const IvfIndex& idx, const std::string& path);
IvfIndex load_ivf(const std::string& path);

/// Models persist as `<prefix>.manifest` (text: k, d, feature names) plus
/// `<prefix>.weights` (sidecar binary).
void save_models(const std::vector<LinearModel>& models,
                 const std::vector<std::string>& feature_names, std::size_t dim,
                 const std::string& prefix);
std::vector<LinearModel> load_models(const std::string& prefix);

}  // namespace dcobench
