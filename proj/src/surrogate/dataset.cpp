// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surrogate/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"

namespace photonbench {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  return p.parent_path() / (p.filename().string() + suffix);
}

std::string journal_key(const SearchSpace& space, const DatasetOptions& o) {
  Fnv1a h;
  h.add(search_space_to_json(space).dump());
  h.add(fidelity_name(o.fidelity));
  h.add(objective_name(o.objective));
  h.add(o.subsample ? std::to_string(*o.subsample) : std::string("all"));
  h.add(std::to_string(o.seed));
  return std::to_string(h.value());
}

std::vector<std::uint64_t> selected_indices(const SearchSpace& space, const DatasetOptions& o) {
  const std::uint64_t total = space.count();
  if (o.subsample) return subsample_indices(total, *o.subsample, o.seed);
  std::vector<std::uint64_t> all(total);
  for (std::uint64_t k = 0; k < total; ++k) all[k] = k;
  return all;
}

DatasetRow make_row(const SearchSpace& space, std::uint64_t index, const DatasetOptions& o) {
  DatasetRow r;
  r.index = index;
  r.params = space.point(index);
  r.material_combo = index / space.parameter_count();
  r.fidelity = o.fidelity;
  r.objective = o.objective;
  return r;
}

// Evaluates `todo` on a pool, calling `done` (serialized) per finished row.
void run_pool(const SearchSpace& space, const PointEvaluator& evaluate, const DatasetOptions& o,
              const std::vector<std::uint64_t>& todo,
              const std::function<void(DatasetRow, std::string)>& done) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> finished{0};
  std::atomic<bool> halt{false};
  std::mutex mu;
  std::exception_ptr fatal;
  const auto worker = [&] {
    while (!halt) {
      const std::size_t pos = next++;
      if (pos >= todo.size()) return;
      if (o.stop_after && finished.load() >= *o.stop_after) return;
      DatasetRow row = make_row(space, todo[pos], o);
      std::string failure;
      try {
        row.value = evaluate(row.index, space.at(row.index));
      } catch (const DivergenceError& e) {
        row.value = std::nan("");
        failure = e.what();
      } catch (const TimeoutError& e) {
        row.value = std::nan("");
        failure = e.what();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        halt = true;
        return;
      }
      std::lock_guard lock(mu);
      if (o.stop_after && finished.load() >= *o.stop_after) return;
      done(std::move(row), std::move(failure));
      ++finished;
    }
  };
  const int n = std::max(1, std::min<int>(o.workers, static_cast<int>(todo.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);
}

}  // namespace

std::vector<std::uint64_t> subsample_indices(std::uint64_t total, std::uint64_t count,
                                             std::uint64_t seed) {
  if (count > total)
    throw InvalidArgument("subsample of " + std::to_string(count) + " exceeds the " +
                          std::to_string(total) + " grid points");
  // Floyd's algorithm: one draw per selected index.
  Rng rng(seed);
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = total - count; j < total; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

std::string dataset_header(const SearchSpace& space) {
  std::string h = "index";
  for (const auto& p : space.params) h += "," + p.name;
  h += ",material_combo,fidelity,objective_kind,value";
  return h;
}

std::string format_dataset_row(const DatasetRow& r) {
  std::string s = std::to_string(r.index);
  for (double v : r.params) s += "," + format_double(v);
  s += "," + std::to_string(r.material_combo) + "," + fidelity_name(r.fidelity) + "," +
       objective_name(r.objective) + "," + format_double(r.value);
  return s;
}

std::vector<DatasetRow> parse_dataset_csv(const std::string& text, const std::string& source) {
  const auto t = parse_csv(text, source);
  if (t.header.size() < 5 || t.header.front() != "index")
    throw InvalidArgument(source + ": not a dataset file");
  const std::size_t d = t.header.size() - 5;
  std::vector<DatasetRow> rows;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& c = t.rows[k];
    const std::string ctx = source + " row " + std::to_string(k + 1);
    if (c.size() != t.header.size()) throw InvalidArgument(ctx + ": wrong number of columns");
    DatasetRow r;
    r.index = std::stoull(c[0]);
    for (std::size_t p = 0; p < d; ++p) r.params.push_back(parse_double(c[1 + p], ctx));
    r.material_combo = std::stoull(c[1 + d]);
    r.fidelity = parse_fidelity(c[2 + d]);
    r.objective = parse_objective(c[3 + d]);
    r.value = parse_double(c[4 + d], ctx);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<DatasetRow> read_dataset(const std::filesystem::path& path) {
  return parse_dataset_csv(read_text_file(path), path.string());
}

std::vector<DatasetRow> evaluate_dataset(const SearchSpace& space, const PointEvaluator& evaluate,
                                         const DatasetOptions& options) {
  validate_search_space(space);
  const auto todo = selected_indices(space, options);
  std::map<std::uint64_t, DatasetRow> rows;
  run_pool(space, evaluate, options, todo,
           [&](DatasetRow row, std::string) { rows.emplace(row.index, std::move(row)); });
  std::vector<DatasetRow> out;
  for (auto& [k, r] : rows) out.push_back(std::move(r));
  return out;
}

DatasetReport generate_dataset(const SearchSpace& space, const PointEvaluator& evaluate,
                               const DatasetOptions& options, const std::filesystem::path& out) {
  validate_search_space(space);
  const auto selected = selected_indices(space, options);
  const auto journal_path = with_suffix(out, ".partial");
  const std::string key = journal_key(space, options);
  const std::string header = dataset_header(space);

  DatasetReport report;
  report.selected = selected.size();
  std::map<std::uint64_t, DatasetRow> rows;
  std::map<std::uint64_t, std::string> failures;

  // Resume: keep complete lines of a journal written for the same sweep.
  if (std::filesystem::exists(journal_path)) {
    const std::string text = read_text_file(journal_path);
    const std::string expect = "# sweep: " + key + "\n" + header + "\n";
    if (text.rfind(expect, 0) != 0)
      throw ConfigError(journal_path.string() + " belongs to a different sweep; remove it to start over");
    std::string body = text.substr(expect.size());
    body.erase(body.find_last_of('\n') == std::string::npos ? 0 : body.find_last_of('\n') + 1);
    for (auto& r : parse_dataset_csv(header + "\n" + body, journal_path.string()))
      rows.emplace(r.index, std::move(r));
    std::string clean = expect;
    for (const auto& [k, r] : rows) clean += format_dataset_row(r) + "\n";
    write_file_atomic(journal_path, clean);
    report.resumed = rows.size();
  } else {
    if (!out.parent_path().empty()) std::filesystem::create_directories(out.parent_path());
    write_file_atomic(journal_path, "# sweep: " + key + "\n" + header + "\n");
  }

  std::vector<std::uint64_t> todo;
  for (auto k : selected)
    if (!rows.count(k)) todo.push_back(k);

  {
    std::ofstream journal(journal_path, std::ios::app | std::ios::binary);
    if (!journal) throw IoError("cannot append to " + journal_path.string());
    run_pool(space, evaluate, options, todo, [&](DatasetRow row, std::string failure) {
      journal << format_dataset_row(row) << '\n';
      journal.flush();
      if (!failure.empty()) failures.emplace(row.index, std::move(failure));
      rows.emplace(row.index, std::move(row));
      ++report.evaluated;
    });
  }
  for (const auto& [k, r] : rows)
    if (r.failed() && !failures.count(k)) failures.emplace(k, "failed in an earlier run");
  for (const auto& f : failures) report.failures.push_back(f);
  if (rows.size() < selected.size()) return report;

  std::string csv = header + "\n";
  for (const auto& [k, r] : rows) csv += format_dataset_row(r) + "\n";
  nlohmann::ordered_json manifest;
  manifest["space"] = search_space_to_json(space);
  manifest["fidelity"] = fidelity_name(options.fidelity);
  manifest["objective_kind"] = objective_name(options.objective);
  manifest["seed"] = options.seed;
  manifest["subsample"] = options.subsample ? nlohmann::ordered_json(*options.subsample)
                                            : nlohmann::ordered_json(nullptr);
  manifest["rows"] = rows.size();
  manifest["failures"] = nlohmann::ordered_json::array();
  for (const auto& [k, msg] : failures)
    manifest["failures"].push_back({{"index", k}, {"error", msg}});
  write_file_atomic(out, csv);
  write_file_atomic(with_suffix(out, ".manifest.json"), manifest.dump(2) + "\n");
  std::filesystem::remove(journal_path);
  report.complete = true;
  return report;
}

Split split_rows(std::size_t n, const SplitSpec& spec) {
  if (n < 10) throw InvalidArgument("splitting needs at least 10 rows, got " + std::to_string(n));
  if (spec.train < 0 || spec.validation < 0 || spec.test < 0 ||
      std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9)
    throw InvalidArgument("split fractions must be non-negative and sum to 1");
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  Rng rng(spec.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.validation * static_cast<double>(n)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

SurrogateInputs surrogate_inputs(const SearchSpace& space) {
  SurrogateInputs in;
  for (const auto& p : space.params) {
    in.names.push_back(p.name);
    in.lower.push_back(p.lower);
    in.upper.push_back(p.upper);
  }
  const auto combos = space.material_combinations();
  if (combos > 1) {
    in.names.push_back("material_combo");
    in.lower.push_back(0.0);
    in.upper.push_back(static_cast<double>(combos - 1));
  }
  return in;
}

std::vector<double> surrogate_input(const SearchSpace& space, const std::vector<double>& params,
                                    std::uint64_t combo) {
  std::vector<double> x = params;
  if (space.material_combinations() > 1) x.push_back(static_cast<double>(combo));
  return x;
}

TrainingSet training_set(const SearchSpace& space, const std::vector<DatasetRow>& rows,
                         const std::vector<std::size_t>& positions) {
  std::vector<std::size_t> ok;
  for (auto p : positions)
    if (!rows.at(p).failed()) ok.push_back(p);
  const auto dims = surrogate_inputs(space).names.size();
  TrainingSet t;
  t.x.resize(static_cast<Eigen::Index>(ok.size()), static_cast<Eigen::Index>(dims));
  t.y.resize(static_cast<Eigen::Index>(ok.size()));
  for (std::size_t r = 0; r < ok.size(); ++r) {
    const auto& row = rows[ok[r]];
    const auto x = surrogate_input(space, row.params, row.material_combo);
    if (x.size() != dims) throw InvalidArgument("dataset rows do not match the search space");
    for (std::size_t c = 0; c < dims; ++c)
      t.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x[c];
    t.y(static_cast<Eigen::Index>(r)) = row.value;
  }
  return t;
}

}  // namespace photonbench
