#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlab/tensor.hpp"

namespace dlab::synthgen {

inline constexpr std::array<const char*, 5> kSaNames = {"age", "sex", "education",
                                                        "insurance", "obesity"};

std::size_t sa_index(const std::string& name);

// Controls the synthetic fundus-like generator. The primary SA and the DR
// label are drawn jointly from a 2x2 contingency table solved from
// (dr_prevalence, the primary SA's marginal, confound_rho); the other four
// SAs are independent per patient.
struct GeneratorConfig {
    std::size_t n_patients = 100;
    std::size_t images_per_patient = 4;
    std::size_t image_size = 32;
    std::size_t channels = 3;
    double confound_rho = 0.0;
    double dr_prevalence = 0.18;
    std::string primary_sa = "age";
    std::map<std::string, double> sa_marginals = {
        {"age", 0.5}, {"sex", 0.5}, {"education", 0.7}, {"insurance", 0.6}, {"obesity", 0.3}};
    double lesion_intensity = 0.55;
    double sa_feature_strength = 0.30;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Sample {
    Tensor<float> image;  // [channels, size, size], values in [0,1]
    int dr_label = 0;
    std::array<int, 5> sa = {0, 0, 0, 0, 0};  // order of kSaNames
    std::string patient_id;
    std::string image_id;
    std::string split;  // "", "train", "val" or "test"

    int sa_value(const std::string& name) const { return sa[sa_index(name)]; }
};

struct Dataset {
    std::size_t image_size = 0;
    std::size_t channels = 0;
    std::vector<Sample> samples;
};

struct SplitAssignment {
    std::vector<std::string> train;  // patient ids
    std::vector<std::string> val;
    std::vector<std::string> test;
};

struct InfeasibleConfoundError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SplitError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// dataset file errors, reported distinctly
struct DatasetIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedHeaderError : DatasetIoError {
    using DatasetIoError::DatasetIoError;
};
struct TruncatedTensorError : DatasetIoError {
    using DatasetIoError::DatasetIoError;
};
struct CountMismatchError : DatasetIoError {
    using DatasetIoError::DatasetIoError;
};

// Solved 2x2 joint P(dr, primary_sa); throws InfeasibleConfoundError when the
// requested rho violates the Fréchet bounds for the given marginals.
struct JointTable {
    double p11, p10, p01, p00;
};
JointTable solve_joint(double dr_prevalence, double sa_marginal, double rho);

// Parallel per-patient generation produces the same bytes as sequential
// (per-patient seeds are derived from the master seed).
Dataset generate_dataset(const GeneratorConfig& config, std::size_t threads = 1);

SplitAssignment split_dataset(const Dataset& dataset,
                              const std::array<double, 3>& fractions,
                              std::uint64_t seed);

// tags every sample's split field from an assignment
void apply_split(Dataset& dataset, const SplitAssignment& split);

struct AugmentParams {
    bool hflip = false;
    bool vflip = false;
    int quarter_turns = 0;  // 0..3 counter-clockwise
    double brightness_delta = 0.0;
    double contrast_scale = 1.0;
    double blur_sigma = 0.0;
};

Tensor<float> augment(const Tensor<float>& image, const AugmentParams& params);

// writes <dir>/meta.csv and <dir>/images.bin
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Pearson correlation of the binary (primary SA, DR) indicators, one
// observation per patient.
double empirical_confound(const Dataset& dataset, const std::string& sa_name);

// fraction of DR-positive patients among the given patient ids
double patient_prevalence(const Dataset& dataset, const std::vector<std::string>& patient_ids);

}  // namespace dlab::synthgen
