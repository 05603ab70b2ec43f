#include "dstofw/problem.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dstofw/error.hpp"

namespace dstofw {

std::string_view to_string(Objective objective) {
  return objective == Objective::convex ? "convex" : "nonconvex";
}

Objective parse_objective(std::string_view text) {
  if (text == "convex") return Objective::convex;
  if (text == "nonconvex") return Objective::nonconvex;
  throw ConfigError(fmt::format("objective: expected convex|nonconvex, got '{}'", text));
}

namespace {

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace

LabelMap LabelMap::parse(std::string_view text) {
  LabelMap result;
  result.table.clear();
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view entry = text.substr(start, comma - start);
    const std::size_t colon = entry.find(':');
    double raw = 0.0, mapped = 0.0;
    if (colon == std::string_view::npos || !parse_double(entry.substr(0, colon), raw) ||
        !parse_double(entry.substr(colon + 1), mapped) || (mapped != 1.0 && mapped != -1.0)) {
      throw ConfigError(fmt::format("label_map: bad entry '{}' (want raw:+1 or raw:-1)", entry));
    }
    result.table[raw] = mapped;
    start = comma + 1;
  }
  return result;
}

std::optional<double> LabelMap::map(double raw) const {
  if (auto it = table.find(raw); it != table.end()) return it->second;
  return std::nullopt;
}

ParsedData parse_libsvm(std::istream& in, const LabelMap& labels,
                        std::optional<Eigen::Index> dim_override) {
  struct Row {
    std::vector<std::pair<Eigen::Index, double>> entries;
    double label;
  };
  std::vector<Row> rows;
  Eigen::Index max_index = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_ws(view);
    if (tokens.empty()) continue;

    double raw = 0.0;
    if (!parse_double(tokens[0], raw)) {
      throw ParseError(fmt::format("malformed label '{}'", tokens[0]), line_no);
    }
    const auto mapped = labels.map(raw);
    if (!mapped) throw ParseError(fmt::format("unmappable label '{}'", tokens[0]), line_no);

    Row row{{}, *mapped};
    long previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view token = tokens[t];
      const std::size_t colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(fmt::format("malformed token '{}'", token), line_no);
      }
      if (token.substr(0, colon) == "qid") continue;
      long index = 0;
      const auto idx = token.substr(0, colon);
      auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
      double value = 0.0;
      if (ec != std::errc() || ptr != idx.data() + idx.size() ||
          !parse_double(token.substr(colon + 1), value)) {
        throw ParseError(fmt::format("malformed token '{}'", token), line_no);
      }
      if (index < 1) throw ParseError(fmt::format("index {} is not 1-based", index), line_no);
      if (index <= previous) {
        throw ParseError(fmt::format("indices not ascending ({} after {})", index, previous),
                         line_no);
      }
      previous = index;
      row.entries.emplace_back(index - 1, value);
      max_index = std::max<Eigen::Index>(max_index, index - 1);
    }
    rows.push_back(std::move(row));
  }

  ParsedData data;
  data.dim = max_index + 1;
  if (dim_override) {
    if (*dim_override < data.dim) {
      throw ParseError(fmt::format("feature index {} exceeds dim override {}", max_index + 1,
                                   *dim_override),
                       0);
    }
    data.dim = *dim_override;
  }
  data.samples.reserve(rows.size());
  for (auto& row : rows) {
    Sample s;
    s.features.resize(data.dim);
    s.features.reserve(static_cast<Eigen::Index>(row.entries.size()));
    for (const auto& [j, value] : row.entries) s.features.insert(j) = value;
    s.label = row.label;
    data.samples.push_back(std::move(s));
  }
  return data;
}

ParsedData load_libsvm(const std::string& path, const LabelMap& labels,
                       std::optional<Eigen::Index> dim_override) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("dataset: cannot open '{}'", path));
  try {
    return parse_libsvm(in, labels, dim_override);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()), e.line());
  }
}

ParsedData make_synthetic(const SyntheticSpec& spec) {
  if (spec.samples < 1 || spec.dim < 1) throw ConfigError("synthetic: n and dim must be >= 1");
  if (!(spec.noise >= 0.0 && spec.noise <= 0.5)) throw ConfigError("synthetic: noise must be in [0, 0.5]");
  if (!(spec.density > 0.0 && spec.density <= 1.0)) throw ConfigError("synthetic: density must be in (0, 1]");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Vector<double> separator(spec.dim);
  for (Eigen::Index j = 0; j < spec.dim; ++j) separator(j) = normal(rng);
  const bool binary = spec.density < 1.0;
  if (binary) {
    // Center binary features so the planted rule is not dominated by the count of ones.
    separator.array() -= separator.mean();
  }

  ParsedData data;
  data.dim = spec.dim;
  data.samples.reserve(static_cast<std::size_t>(spec.samples));
  for (Eigen::Index n = 0; n < spec.samples; ++n) {
    Sample s;
    s.features.resize(spec.dim);
    double score = 0.0;
    for (Eigen::Index j = 0; j < spec.dim; ++j) {
      double value = 0.0;
      if (binary) {
        value = uniform(rng) < spec.density ? 1.0 : 0.0;
      } else {
        value = normal(rng);
      }
      if (value != 0.0) {
        s.features.insert(j) = value;
        score += value * separator(j);
      }
    }
    s.label = score >= 0.0 ? 1.0 : -1.0;
    if (uniform(rng) < spec.noise) s.label = -s.label;
    data.samples.push_back(std::move(s));
  }
  return data;
}

void scale_max_abs(std::vector<Sample>& samples, Eigen::Index dim) {
  Vector<double> scale = Vector<double>::Zero(dim);
  for (const auto& s : samples)
    for (SparseVector<double>::InnerIterator it(s.features); it; ++it)
      scale(it.index()) = std::max(scale(it.index()), std::abs(it.value()));
  for (auto& s : samples)
    for (SparseVector<double>::InnerIterator it(s.features); it; ++it)
      if (scale(it.index()) > 0.0) it.valueRef() /= scale(it.index());
}

LocalDataset::LocalDataset(const std::vector<Sample>& samples, std::span<const std::size_t> order,
                           Eigen::Index dim)
    : features_(static_cast<Eigen::Index>(order.size()), dim),
      labels_(static_cast<Eigen::Index>(order.size())) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Sample& s = samples[order[r]];
    if (s.features.size() > dim) throw ConfigError("dataset: sample dimension exceeds problem dim");
    for (SparseVector<double>::InnerIterator it(s.features); it; ++it)
      triplets.emplace_back(static_cast<Eigen::Index>(r), it.index(), it.value());
    labels_(static_cast<Eigen::Index>(r)) = s.label;
  }
  features_.setFromTriplets(triplets.begin(), triplets.end());
  features_.makeCompressed();
}

Sample LocalDataset::sample(Eigen::Index j) const {
  Sample s;
  s.features = features_.row(j).transpose();
  s.label = labels_(j);
  return s;
}

PartitionStrategy parse_partition(std::string_view text) {
  if (text == "round_robin") return PartitionStrategy::round_robin;
  if (text == "contiguous") return PartitionStrategy::contiguous;
  throw ConfigError(fmt::format("partition: expected round_robin|contiguous, got '{}'", text));
}

std::vector<LocalDataset> partition(const std::vector<Sample>& samples, Eigen::Index dim, int agents,
                                    PartitionStrategy strategy, std::uint64_t seed, bool equalize) {
  if (samples.empty()) throw ConfigError("partition: empty dataset");
  if (agents < 1) throw ConfigError("partition: agent count must be >= 1");
  const std::size_t total = samples.size();
  const auto m = static_cast<std::size_t>(agents);
  if (total < m) {
    throw ConfigError(fmt::format("partition: {} samples cannot cover {} agents", total, agents));
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (equalize) order.resize(m * (total / m));

  std::vector<std::vector<std::size_t>> buckets(m);
  if (strategy == PartitionStrategy::round_robin) {
    for (std::size_t r = 0; r < order.size(); ++r) buckets[r % m].push_back(order[r]);
  } else {
    const std::size_t base = order.size() / m;
    const std::size_t extra = order.size() % m;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t count = base + (i < extra ? 1 : 0);
      buckets[i].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                        order.begin() + static_cast<std::ptrdiff_t>(cursor + count));
      cursor += count;
    }
  }

  std::vector<LocalDataset> locals;
  locals.reserve(m);
  for (const auto& bucket : buckets) locals.emplace_back(samples, bucket, dim);
  return locals;
}

LocalDataset merge(std::span<const LocalDataset> locals) {
  if (locals.empty()) throw ConfigError("merge: no local datasets");
  std::vector<Sample> all;
  for (const auto& local : locals)
    for (Eigen::Index j = 0; j < local.size(); ++j) all.push_back(local.sample(j));
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return LocalDataset(all, order, locals.front().dim());
}

FiniteSumProblem::FiniteSumProblem(std::vector<LocalDataset> locals, Objective objective)
    : locals_(std::move(locals)), objective_(objective) {
  if (locals_.empty()) throw ConfigError("problem: at least one agent required");
  dim_ = locals_.front().dim();
  for (const auto& local : locals_) {
    if (local.size() < 1) throw ConfigError("problem: every agent needs at least one sample");
    if (local.dim() != dim_) throw ConfigError("problem: inconsistent feature dimension");
  }
}

Eigen::Index FiniteSumProblem::total_samples() const {
  Eigen::Index n = 0;
  for (const auto& local : locals_) n += local.size();
  return n;
}

Eigen::Index FiniteSumProblem::min_local_size() const {
  Eigen::Index n = locals_.front().size();
  for (const auto& local : locals_) n = std::min(n, local.size());
  return n;
}

SparseVector<double> grad_component(Objective objective, const Vector<double>& x,
                                    const Sample& s) {
  const double margin = s.label * s.features.dot(x);
  return (margin_derivative(objective, margin) * s.label) * s.features;
}

double loss_component(Objective objective, const Vector<double>& x, const Sample& s) {
  return component_loss(objective, s.label * s.features.dot(x));
}

namespace {

/// Per-sample d loss / d <a, x>, i.e. l * margin_derivative(l <a, x>).
Vector<double> score_coefficients(const Vector<double>& x, const LocalDataset& local,
                                  Objective objective) {
  const Vector<double> margins = local.labels().cwiseProduct(local.features() * x);
  Vector<double> coef(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j)
    coef(j) = local.labels()(j) * margin_derivative(objective, margins(j));
  return coef;
}

}  // namespace

Vector<double> full_local_gradient(const Vector<double>& x, const LocalDataset& local,
                                   Objective objective, std::int64_t& ifo) {
  ifo += local.size();
  const Vector<double> coef = score_coefficients(x, local, objective);
  return (local.features().transpose() * coef) / static_cast<double>(local.size());
}

Vector<double> sampled_gradient_difference(const Vector<double>& x_new, const Vector<double>& x_old,
                                           const LocalDataset& local,
                                           std::span<const Eigen::Index> indices,
                                           Objective objective, std::int64_t& ifo) {
  if (indices.empty()) throw NumericError("sampled_gradient_difference: empty sample set");
  ifo += 2 * static_cast<std::int64_t>(indices.size());
  Vector<double> result = Vector<double>::Zero(local.dim());
  const auto& a = local.features();
  for (const Eigen::Index j : indices) {
    const double label = local.labels()(j);
    const double dot_new = a.row(j).dot(x_new);
    const double dot_old = a.row(j).dot(x_old);
    const double weight = label * (margin_derivative(objective, label * dot_new) -
                                   margin_derivative(objective, label * dot_old));
    if (weight == 0.0) continue;
    for (SparseRowMatrix::InnerIterator it(a, j); it; ++it) result(it.col()) += weight * it.value();
  }
  return result / static_cast<double>(indices.size());
}

double local_loss(const Vector<double>& x, const LocalDataset& local, Objective objective) {
  const Vector<double> margins = local.labels().cwiseProduct(local.features() * x);
  double mean = 0.0;
  for (Eigen::Index j = 0; j < margins.size(); ++j)
    mean += (component_loss(objective, margins(j)) - mean) / static_cast<double>(j + 1);
  return mean;
}

LossAndGradient global_loss_and_gradient(const Vector<double>& x, const FiniteSumProblem& problem,
                                         std::int64_t& eval_ifo) {
  // Running means keep F exact when every component loss is equal (e.g. at x = 0).
  LossAndGradient out{0.0, Vector<double>::Zero(problem.dim())};
  int agent = 0;
  for (const auto& local : problem.locals()) {
    const Vector<double> margins = local.labels().cwiseProduct(local.features() * x);
    Vector<double> coef(margins.size());
    double mean = 0.0;
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
      mean += (component_loss(problem.objective(), margins(j)) - mean) / static_cast<double>(j + 1);
      coef(j) = local.labels()(j) * margin_derivative(problem.objective(), margins(j));
    }
    const auto n = static_cast<double>(local.size());
    ++agent;
    out.loss += (mean - out.loss) / agent;
    out.gradient += (local.features().transpose() * coef) / n;
    eval_ifo += local.size();
  }
  out.gradient /= static_cast<double>(problem.agents());
  return out;
}

double global_loss(const Vector<double>& x, const FiniteSumProblem& problem,
                   std::int64_t& eval_ifo) {
  double mean = 0.0;
  int agent = 0;
  for (const auto& local : problem.locals()) {
    mean += (local_loss(x, local, problem.objective()) - mean) / ++agent;
    eval_ifo += local.size();
  }
  return mean;
}

}  // namespace dstofw
