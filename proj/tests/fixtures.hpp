#pragma once

#include <vector>

#include "isearch/synthgen.hpp"

namespace fixtures {

// 200 inliers in a 5-dim subspace of R^40 plus 50 uniform outliers.
inline isearch::ModelSpec small_uniform() {
  isearch::ModelSpec s;
  s.M1 = 40;
  s.n_i = 200;
  s.n_o = 50;
  s.inliers = isearch::UniformOnSubspace{5};
  s.outliers = isearch::UniformAmbient{};
  return s;
}

// One spec per inlier/outlier model variant, all at test scale.
inline std::vector<isearch::ModelSpec> model_variants() {
  using namespace isearch;
  std::vector<ModelSpec> out;
  out.push_back(small_uniform());

  ModelSpec clustered = small_uniform();
  clustered.outliers = ClusteredOutliers{0.1, ClusterCenter::RandomDirection};
  out.push_back(clustered);

  ModelSpec near = small_uniform();
  near.outliers = ClusteredOutliers{0.1, ClusterCenter::NearSubspace};
  out.push_back(near);

  ModelSpec dependent = small_uniform();
  dependent.outliers = DependentOutliers{8, 2};
  out.push_back(dependent);

  ModelSpec close = small_uniform();
  close.outliers = CloseOutliers{2};
  out.push_back(close);

  ModelSpec uni = small_uniform();
  uni.n_i = 100;
  uni.n_o = 20;
  uni.inliers = UnionOfSubspaces{5, 2, {}};
  out.push_back(uni);

  ModelSpec cin = small_uniform();
  cin.n_i = 60;
  cin.inliers = ClusteredInliers{5, 0.25};
  out.push_back(cin);

  ModelSpec noisy = small_uniform();
  noisy.sigma_n = 0.5;
  out.push_back(noisy);
  return out;
}

}  // namespace fixtures
