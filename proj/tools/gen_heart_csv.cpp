// Generates the bundled heart-disease CSV: a deterministic synthetic
// replica matching the published dataset's schema and bulk statistics
// (1190 rows of which 272 are exact duplicates, zero-inflated cholesterol
// and one zero blood pressure, positive-majority classes, and
// class-conditional feature distributions strong enough for an MLP to
// reach the mid-0.8 AUC range without tuning).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optbench/rng.hpp"

namespace {

using optbench::Rng;

using Row = std::array<double, 12>;  // column order of the published file

constexpr const char* kHeader =
    "age,sex,chest pain type,resting bp s,cholesterol,fasting blood sugar,"
    "resting ecg,max heart rate,exercise angina,oldpeak,ST slope,target";

std::size_t categorical(Rng& rng, std::initializer_list<double> probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t i = 0;
  for (const double p : probs) {
    acc += p;
    if (u < acc) return i;
    ++i;
  }
  return probs.size() - 1;
}

double bern(Rng& rng, double p) { return rng.uniform() < p ? 1.0 : 0.0; }

double draw_int(Rng& rng, double mean, double sd, double lo, double hi) {
  return std::clamp(std::round(rng.normal(mean, sd)), lo, hi);
}

// Class-conditional feature model. The gaps (chest pain type 4, exercise
// angina, flat/down ST slope, oldpeak and a lower peak heart rate in the
// disease class) are the drivers; everything else is near-noise.
Row draw_row(Rng& rng, bool disease) {
  Row r{};
  if (!disease) {
    r[0] = draw_int(rng, 50.5, 9.3, 28, 77);                       // age
    r[1] = bern(rng, 0.63);                                        // sex
    r[2] = 1.0 + static_cast<double>(                              // chest pain type
               categorical(rng, {0.16, 0.32, 0.33, 0.19}));
    r[3] = draw_int(rng, 130, 17, 92, 200);                        // resting bp s
    r[4] = rng.uniform() < 0.065 ? 0.0                             // cholesterol
                                 : draw_int(rng, 239, 52, 85, 603);
    r[5] = bern(rng, 0.11);                                        // fasting blood sugar
    r[6] = static_cast<double>(categorical(rng, {0.68, 0.26, 0.06}));  // resting ecg
    r[7] = draw_int(rng, 149, 22, 60, 202);                        // max heart rate
    r[8] = bern(rng, 0.13);                                        // exercise angina
    r[9] = rng.uniform() < 0.58                                    // oldpeak
               ? 0.0
               : std::clamp(std::round((std::abs(rng.normal(0.0, 0.85)) + 0.1) * 10.0) / 10.0,
                            0.0, 6.2);
    r[10] = 1.0 + static_cast<double>(categorical(rng, {0.74, 0.24, 0.02}));  // ST slope
  } else {
    r[0] = draw_int(rng, 55.9, 8.7, 28, 77);
    r[1] = bern(rng, 0.86);
    r[2] = 1.0 + static_cast<double>(categorical(rng, {0.04, 0.10, 0.12, 0.74}));
    r[3] = draw_int(rng, 134, 19, 92, 200);
    r[4] = rng.uniform() < 0.25 ? 0.0 : draw_int(rng, 246, 58, 85, 603);
    r[5] = bern(rng, 0.33);
    r[6] = static_cast<double>(categorical(rng, {0.52, 0.38, 0.10}));
    r[7] = draw_int(rng, 127, 23, 60, 202);
    r[8] = bern(rng, 0.62);
    r[9] = rng.uniform() < 0.22
               ? 0.0
               : std::clamp(std::round((std::abs(rng.normal(0.0, 1.3)) + 0.2) * 10.0) / 10.0,
                            0.0, 6.2);
    r[10] = 1.0 + static_cast<double>(categorical(rng, {0.23, 0.65, 0.12}));
  }
  return r;
}

// Uniqueness key over the columns that survive the pipeline's feature
// drop (everything except fasting blood sugar), so deduplication after
// the drop still finds exactly the appended copies.
std::array<double, 11> drop_key(const Row& r) {
  std::array<double, 11> key{};
  std::size_t k = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (i != 5) key[k++] = r[i];
  return key;
}

std::string cell(double v, bool decimal) {
  char buf[32];
  if (decimal)
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  else
    std::snprintf(buf, sizeof(buf), "%ld", std::lround(v));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the bundled synthetic heart-disease CSV"};
  std::string output = "data/heart.csv";
  std::uint64_t seed = 7061934;
  double noise = 0.05;
  int uniques0 = 438;
  int uniques1 = 480;
  int duplicates = 272;
  app.add_option("--output", output, "Output CSV path");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--noise", noise,
                 "Probability of drawing a row's features from the opposite class");
  CLI11_PARSE(app, argc, argv);

  Rng rng(seed);
  std::vector<Row> rows;
  std::set<std::array<double, 11>> seen;

  for (int c = 0; c <= 1; ++c) {
    const int want = c == 0 ? uniques0 : uniques1;
    for (int i = 0; i < want;) {
      const bool features_as = rng.uniform() < noise ? c == 0 : c == 1;
      Row r = draw_row(rng, features_as);
      r[11] = static_cast<double>(c);
      if (!seen.insert(drop_key(r)).second) continue;  // redraw on collision
      rows.push_back(r);
      ++i;
    }
  }

  // The published file has a single zero resting blood pressure; plant it
  // in one disease row (re-keyed so uniqueness still holds).
  for (std::size_t i = rows.size(); i-- > 0;) {
    if (rows[i][11] == 1.0) {
      const double original = rows[i][3];
      seen.erase(drop_key(rows[i]));
      rows[i][3] = 0.0;
      if (seen.insert(drop_key(rows[i])).second) break;
      rows[i][3] = original;  // collision: put the row back and try the next one
      seen.insert(drop_key(rows[i]));
    }
  }

  const std::size_t unique_count = rows.size();
  for (int d = 0; d < duplicates; ++d)
    rows.push_back(rows[rng.below(unique_count)]);
  rng.shuffle(rows);

  std::ofstream out(output, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << output << "\n";
    return 1;
  }
  out << kHeader << "\n";
  for (const Row& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << cell(r[i], i == 9);
    }
    out << "\n";
  }
  std::cout << "wrote " << output << ": " << rows.size() << " rows (" << unique_count
            << " unique + " << duplicates << " duplicates)\n";
  return 0;
}
