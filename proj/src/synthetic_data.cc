// Copyright 2026 The amalgam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "amalgam/synthetic_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "amalgam/error.h"
#include "amalgam/random.h"

namespace amalgam {

void TaskSpec::Validate() const {
  if (num_classes == 0 || input_dim == 0 || samples_per_class == 0)
    throw ConfigError("data: num_classes, input_dim and samples_per_class must be positive");
  if (samples_per_class < 5)
    throw ConfigError("data: samples_per_class must be at least 5 for the 80/20 split");
  if (!(center_scale > 0.0) || !(noise_sigma > 0.0))
    throw ConfigError("data: center_scale and noise_sigma must be positive");
}

Tensor Dataset::InputTensor() const {
  return Tensor::FromData({size(), input_dim}, inputs);
}

namespace {

constexpr int kMaxMeanAttempts = 10000;

std::vector<std::vector<double>> DrawMeans(const TaskSpec &spec) {
  Rng rng = MakeRng(spec.seed, "data/means");
  std::uniform_real_distribution<double> coord(-spec.center_scale, spec.center_scale);
  const double min_sq = 4.0 * spec.noise_sigma * spec.noise_sigma;
  std::vector<std::vector<double>> means;
  for (int attempt = 0; means.size() < spec.num_classes; ++attempt) {
    if (attempt >= kMaxMeanAttempts)
      throw ConfigError("data: cannot place class means at distance >= 2 * noise_sigma");
    std::vector<double> candidate(spec.input_dim);
    for (double &c : candidate) c = coord(rng);
    bool ok = true;
    for (const auto &m : means) {
      double sq = 0.0;
      for (std::size_t k = 0; k < spec.input_dim; ++k)
        sq += (m[k] - candidate[k]) * (m[k] - candidate[k]);
      if (sq < min_sq) {
        ok = false;
        break;
      }
    }
    if (ok) means.push_back(std::move(candidate));
  }
  return means;
}

void Append(Dataset &data, std::span<const double> x, int label) {
  data.inputs.insert(data.inputs.end(), x.begin(), x.end());
  data.labels.push_back(label);
}

Dataset Shuffled(const Dataset &data, Rng &rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset out;
  out.input_dim = data.input_dim;
  for (std::size_t i : order) Append(out, data.row(i), data.labels[i]);
  return out;
}

}  // namespace

TaskData Generate(const TaskSpec &spec) {
  spec.Validate();
  TaskData task;
  task.class_means = DrawMeans(spec);
  Rng rng = MakeRng(spec.seed, "data/samples");
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n_test = spec.samples_per_class / 5;
  Dataset train, test;
  train.input_dim = test.input_dim = spec.input_dim;
  std::vector<double> x(spec.input_dim);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const auto &mean = task.class_means[c];
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      for (std::size_t k = 0; k < spec.input_dim; ++k)
        x[k] = mean[k] + spec.noise_sigma * noise(rng);
      Append(s < n_test ? test : train, x, static_cast<int>(c));
    }
  }
  Rng order_rng = MakeRng(spec.seed, "data/order");
  task.train = Shuffled(train, order_rng);
  task.test = Shuffled(test, order_rng);
  return task;
}

TaskSplit SplitClassesWithPermutation(std::span<const int> permutation,
                                      std::size_t n_parts,
                                      std::size_t overlap_count) {
  const std::size_t num_classes = permutation.size();
  if (n_parts == 0 || num_classes == 0 || num_classes % n_parts != 0) {
    throw ConfigError("split: " + std::to_string(n_parts) + " parts do not divide " +
                      std::to_string(num_classes) + " classes");
  }
  const std::size_t chunk = num_classes / n_parts;
  if (overlap_count >= chunk) {
    throw ConfigError("split: overlap_count " + std::to_string(overlap_count) +
                      " must be below the part size " + std::to_string(chunk));
  }
  if (overlap_count > 0 && n_parts < 2)
    throw ConfigError("split: overlapping classes need at least two parts");
  std::vector<int> sorted(permutation.begin(), permutation.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < num_classes; ++i)
    if (sorted[i] != static_cast<int>(i))
      throw ContractError("split: class order is not a permutation of 0.." +
                          std::to_string(num_classes - 1));

  TaskSplit split;
  split.num_classes = num_classes;
  for (std::size_t p = 0; p < n_parts; ++p)
    split.parts.emplace_back(permutation.begin() + p * chunk,
                             permutation.begin() + (p + 1) * chunk);
  if (overlap_count > 0) {
    const auto base = split.parts;
    for (std::size_t p = 0; p < n_parts; ++p) {
      auto &next = split.parts[(p + 1) % n_parts];
      next.insert(next.end(), base[p].begin(), base[p].begin() + overlap_count);
    }
  }
  for (const auto &part : split.parts)
    split.merge_map.insert(split.merge_map.end(), part.begin(), part.end());
  return split;
}

TaskSplit SplitClasses(std::size_t num_classes, std::size_t n_parts,
                       std::size_t overlap_count, std::uint64_t seed) {
  std::vector<int> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);
  return SplitClassesWithPermutation(order, n_parts, overlap_count);
}

Dataset TeacherView(const Dataset &data, std::span<const int> part) {
  if (part.empty()) throw ContractError("teacher view of an empty class part");
  Dataset view;
  view.input_dim = data.input_dim;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = std::find(part.begin(), part.end(), data.labels[i]);
    if (it != part.end()) Append(view, data.row(i), static_cast<int>(it - part.begin()));
  }
  return view;
}

void WriteDatasetCsv(const Dataset &data, const std::filesystem::path &path,
                     const std::string &comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t k = 0; k < data.input_dim; ++k) out << 'x' << k << ',';
  out << "y\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out << v << ',';
    out << data.labels[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset ReadDatasetCsv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string &why) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  Dataset data;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!header) {
      if (fields.size() < 2 || fields.back() != "y") fail("expected header x0,...,y");
      for (std::size_t k = 0; k + 1 < fields.size(); ++k)
        if (fields[k] != "x" + std::to_string(k)) fail("bad header column '" + fields[k] + "'");
      data.input_dim = fields.size() - 1;
      header = true;
      continue;
    }
    if (fields.size() != data.input_dim + 1) fail("wrong number of columns");
    try {
      for (std::size_t k = 0; k < data.input_dim; ++k) {
        std::size_t used = 0;
        data.inputs.push_back(std::stod(fields[k], &used));
        if (used != fields[k].size()) fail("bad number '" + fields[k] + "'");
      }
      std::size_t used = 0;
      data.labels.push_back(std::stoi(fields.back(), &used));
      if (used != fields.back().size()) fail("bad label '" + fields.back() + "'");
    } catch (const std::logic_error &) {
      fail("bad number");
    }
  }
  if (!header) fail("missing header");
  if (data.size() == 0) fail("no rows");
  return data;
}

}  // namespace amalgam
