#pragma once

#include <span>
#include <string>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

struct EntropyCutParams {
    double beta = 4.0;     // cut power, >= 0
    double epsilon = 0.0;  // uniform floor, >= 0

    void validate() const;
};

// State-dependent distribution over cut positions m in {0..l} for a state of
// length l+1. m keeps the prefix x_{0:m-1} and redraws x_{m:l}; m = 0 redraws
// the entire continuation. Weights depend on the state only through the
// entropy profile computed under the base model.
class CutLaw {
  public:
    virtual ~CutLaw() = default;
    virtual std::string name() const = 0;
    // profile = per-position entropy h_0..h_l; returns l+1 normalized weights.
    virtual std::vector<double> weights_from_profile(std::span<const double> profile) const = 0;

    std::vector<double> weights(const TokenModel& base, std::span<const TokenId> seq) const;
};

class UniformCutLaw final : public CutLaw {
  public:
    std::string name() const override { return "uniform"; }
    std::vector<double> weights_from_profile(std::span<const double> profile) const override;
};

// weights proportional to D_m^beta + epsilon, with D_0 := h_0. Falls back to
// uniform when every weight is zero; beta = 0 reproduces the uniform law
// bitwise (0^0 := 1).
class EntropyCutLaw final : public CutLaw {
  public:
    explicit EntropyCutLaw(EntropyCutParams params);

    std::string name() const override { return "entropy-cut"; }
    std::vector<double> weights_from_profile(std::span<const double> profile) const override;

    const EntropyCutParams& params() const { return params_; }

  private:
    EntropyCutParams params_;
};

// Mass 1/(l+1) on each position, independent of sequence content.
std::vector<double> uniform_cut_weights(std::size_t positions);

std::vector<double> entropy_cut_weights(const TokenModel& base, std::span<const TokenId> seq,
                                        const EntropyCutParams& params);

std::size_t sample_cut(std::span<const double> weights, Rng& rng);

}  // namespace pslab
