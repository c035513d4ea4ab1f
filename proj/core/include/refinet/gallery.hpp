#pragma once

#include "refinet/cpwl.hpp"
#include "refinet/reductions.hpp"
#include "refinet/refinement.hpp"

#include <optional>
#include <string>
#include <vector>

namespace refinet {

// Vertex chain P_0 = 0, ..., P_M = e_1. In 2-D each edge map is the similarity
// |P_{j+1} - P_j| R_angle, optionally composed with the reflection diag(1,-1);
// otherwise explicit matrices are given.
struct GeneratorSpec {
  std::vector<Vec> vertices;
  std::vector<bool> reflect;
  std::vector<Mat> matrices;
};

auto generator_matrices(const GeneratorSpec& spec) -> std::vector<Mat>;
// Homogeneous op with A_j from the spec; checks A_j e_1 = P_{j+1} - P_j and S e_1 = e_1.
auto polygonal_generator(const GeneratorSpec& spec) -> RefinementOp;
void check_edge_condition(const RefinementOp& op, const std::vector<Vec>& vertices, double tol = 1e-12);
// P_j = sum_{i<j} A_i e_1
auto chain_vertices(const RefinementOp& op) -> std::vector<Vec>;

auto rotation(double angle) -> Mat;

auto koch_spec() -> GeneratorSpec;
auto levy_spec() -> GeneratorSpec;
auto heighway_spec() -> GeneratorSpec;
auto hilbert_type_spec() -> GeneratorSpec;

// 2^p-piece Hilbert-type generator in R^p.
struct HilbertRp {
  int p;
  std::vector<Vec> vertices;
  std::vector<Mat> U;  // signed permutations
};
auto hilbert_rp_data(int p) -> HilbertRp;
auto hilbert_rp(int p) -> RefinementOp;

// Stage-n polyline of a homogeneous polygonal generator by direct vertex recursion.
auto polygonal_oracle(const RefinementOp& op, int n) -> CpwlCurve;

// Anchored data for a homogeneous generator: straight anchor, zero forcing and defect.
struct AnchoredInstance {
  RefinementOp op;
  CpwlCurve B;
  CpwlCurve Gamma;
  CpwlCurve eta;
};
auto anchored_instance(const RefinementOp& op) -> AnchoredInstance;

auto gosper_angle() -> double;
auto gosper_system() -> FiniteStateSystem;
// Stacked op with Gamma = (theta e_1, theta e_1), zero forcing and defect.
auto gosper_anchored() -> AnchoredInstance;
// Per-state stage-n polylines by direct recursion.
auto gosper_oracle(int n) -> std::vector<CpwlCurve>;

// Copy maps F_j(x) = A_j x + u_j, straight connectors, M = 2 ell - 1, and
// endpoints a_n = a0 + lambda_n a1, b_n = b0 + lambda_n b1 with lambda_n = 2^-n.
struct ConnectorInstance {
  std::string name;
  int p;
  int ell;
  std::vector<Mat> A;
  std::vector<Vec> u;
  Vec a0, a1, b0, b1;

  auto M() const noexcept -> int { return 2 * ell - 1; }
  auto lambda(int n) const -> double;
  auto start(int n) const -> Vec;
  auto end(int n) const -> Vec;
  // a_n + theta(t) (b_n - a_n)
  auto anchor(int n) const -> CpwlCurve;
  // eta_{n+1}(t) = sum_j A_j eta_n(M t - 2j) + B_n(t)
  auto defect_op() const -> RefinementOp;
  // B_n from the copy and connector rule with the stage anchors.
  auto forcing_direct(int n) const -> CpwlCurve;
  // B^(0), B^(1) with B_n = B^(0) + lambda_n B^(1).
  auto forcing_templates() const -> std::vector<CpwlCurve>;
  auto schedule() const -> ForcingSchedule;
  // Stage-n polyline: F_j(stage n) on copy intervals joined by straight connectors.
  auto oracle(int n) const -> CpwlCurve;
};

auto hilbert_connector_instance() -> ConnectorInstance;
auto morton_instance(int p) -> ConnectorInstance;

// Gamma_n + compiled defect.
auto compile_connector(const ConnectorInstance& inst, int n, const LoopConfig& base = {}) -> CompiledIterate;

// Largest stage each gallery instance is verified at.
auto gallery_stage_cap(const std::string& name) -> int;
auto gallery_names() -> const std::vector<std::string>&;

}  // namespace refinet
