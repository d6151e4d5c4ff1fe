#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csynth/adam.hpp"
#include "csynth/generator_model.hpp"
#include "csynth/rng.hpp"
#include "csynth/tape.hpp"

namespace csynth::gen::detail {

// Shared plumbing for the neural generators. All series here are normalized.

/// Per-dimension mean/std over every value of the batch (std floored at 1e-8).
void fit_state_scaling(GeneratorModel& model, const data::PathBatch& normalized);
[[nodiscard]] Tensor standardize(const GeneratorModel& model, const Tensor& slice);
[[nodiscard]] Tensor destandardize(const GeneratorModel& model, const Tensor& slice);

/// n x k standard normals per step; sample s is drawn from stream s of `seed`.
[[nodiscard]] std::vector<Tensor> noise(std::uint64_t seed, std::size_t n, std::size_t steps,
                                        std::size_t width);
/// Indices into [0, population) for one minibatch.
[[nodiscard]] std::vector<std::size_t> minibatch(std::uint64_t seed, std::size_t iteration,
                                                 std::size_t population, std::size_t size);
/// Per-step n x d slices of the selected samples.
[[nodiscard]] std::vector<Tensor> slices(const data::PathBatch& batch,
                                         const std::vector<std::size_t>& rows);
/// Initial states for n samples, drawn from aux "state.initial".
[[nodiscard]] Tensor initial_states(const GeneratorModel& model, std::size_t n, std::uint64_t seed);

/// Throws NumericError when a loss is NaN/Inf or above the 1e6 divergence guard.
void check_loss(std::size_t iteration, const std::string& term, double value);

/// Clip, then step.
void apply(ad::Adam& opt, ad::ParamSet& params, ad::Gradients grads, double clip);

[[nodiscard]] data::PathBatch to_batch(const std::vector<Tensor>& steps, std::size_t dims);

void train_cegen(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs);
void train_tsgan(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs);
void train_cotgan(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs);
void train_siggan(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs);

[[nodiscard]] data::PathBatch sample_cegen(const GeneratorModel& model, std::size_t n, std::uint64_t seed);
[[nodiscard]] data::PathBatch sample_tsgan(const GeneratorModel& model, std::size_t n, std::uint64_t seed);
[[nodiscard]] data::PathBatch sample_cotgan(const GeneratorModel& model, std::size_t n, std::uint64_t seed);
[[nodiscard]] data::PathBatch sample_siggan(const GeneratorModel& model, std::size_t n, std::uint64_t seed);

}  // namespace csynth::gen::detail
