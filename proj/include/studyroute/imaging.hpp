#ifndef STUDYROUTE_IMAGING_HPP
#define STUDYROUTE_IMAGING_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "studyroute/calibration.hpp"
#include "studyroute/core.hpp"

namespace studyroute {

class mapping_database;

/// Side length of every classifier input plane.
inline constexpr int kInputEdge = 512;

/// A 2-D intensity array, row-major.
struct plane {
    int rows = 0;
    int cols = 0;
    std::vector<float> values;

    plane() = default;
    plane(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0f) {}
    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
};

enum class input_kind : std::uint8_t {
    stack_2d,  ///< first/middle/last slice of a thin volume
    mip_3d,    ///< maximum intensity projections along Z, Y, X
};

/// Three 512x512 channels in [0,1], ready for a classifier backend.
/// Channel order for MIP inputs is the projection along Z, then Y, then X.
struct preprocessed_input {
    input_kind kind = input_kind::stack_2d;
    std::array<plane, 3> channels;
};

/// Min-max rescale into [0,1]; a constant volume maps to all zeros.
pixel_volume normalize_intensity(const pixel_volume& volume);

/// Cubic-spline resampling onto a uniform target grid spanning the source
/// extent, clamped to [0,1] afterwards (cubic overshoot). Source dims must
/// be at least 2x2.
plane resample_plane(const plane& src, int target_rows = kInputEdge,
                     int target_cols = kInputEdge);

/// Resample a volume along its Z axis only, same spline scheme as
/// resample_plane.
pixel_volume resample_volume_z(const pixel_volume& vol, int target_z);

/// Elementwise-max projections of a volume along Z, Y and X, in that order.
std::array<plane, 3> mip_projections(const pixel_volume& vol);

/// Turn a normalized volume into classifier input. Volumes with Z < 40 are
/// treated as two-dimensional (first, middle, last slice); thicker volumes
/// are resampled to Z=512 and reduced to per-axis maximum intensity
/// projections.
preprocessed_input build_input(const pixel_volume& normalized);

/// FNV-1a 64-bit hash over the little-endian float32 bytes of the three
/// channels in order; rendered in decimal in oracle fixture files.
std::uint64_t input_fingerprint(const preprocessed_input& input);

// =============================================================================
// Classifier backends
// =============================================================================

/// A per-modality classifier. Implementations must be deterministic for a
/// fixed input; infer() must either be safe to call concurrently or report
/// thread_safe() == false, in which case callers serialize.
class classifier_backend {
public:
    virtual ~classifier_backend() = default;
    virtual modality backend_modality() const = 0;
    virtual const std::vector<std::string>& class_list() const = 0;
    virtual std::vector<double> infer(const preprocessed_input& input) const = 0;
    virtual const calibration_model& calibration() const = 0;
    virtual bool thread_safe() const { return true; }
};

/// Modality -> backend. MG series are routed to the CR backend; PT series
/// are never classified.
using backend_map = std::map<modality, const classifier_backend*>;

/// Table-driven backend for tests and fixtures: maps an input fingerprint
/// to a fixed logit vector.
class oracle_backend final : public classifier_backend {
public:
    oracle_backend(modality m, std::vector<std::string> classes, calibration_model cal);

    void add_entry(std::uint64_t fingerprint, std::vector<double> logits);
    void set_fallback(std::vector<double> logits);

    modality backend_modality() const override { return modality_; }
    const std::vector<std::string>& class_list() const override { return classes_; }
    std::vector<double> infer(const preprocessed_input& input) const override;
    const calibration_model& calibration() const override { return calibration_; }

private:
    modality modality_;
    std::vector<std::string> classes_;
    calibration_model calibration_;
    std::unordered_map<std::uint64_t, std::vector<double>> table_;
    std::optional<std::vector<double>> fallback_;
};

/// Load an oracle fixture file:
///   # format: oracle-v1
///   # modality: CT
///   # temperature: 1.0
///   # classes: CT_ABDOMEN,CT_SKULL,...
///   <fingerprint>,<class_index>,<z_0>,<z_1>,...
/// A fingerprint of '*' declares fallback logits for unknown volumes.
oracle_backend load_oracle_backend(const std::filesystem::path& path);

/// Format-dispatching loader for backend descriptor files. Currently only
/// the oracle-v1 format is understood; other formats raise load_error.
std::unique_ptr<classifier_backend> load_backend(const std::filesystem::path& path);

/// Classify one series: normalize, build the input, infer, apply the
/// backend temperature and emit a vote for the calibrated top-1 class.
/// Inside a PET study the prediction is lifted to its PET variant class.
/// Returns absent when the series has no pixel data.
std::optional<vote> classify_series(const series_record& series,
                                    const classifier_backend& backend, bool pet_study,
                                    const mapping_database& db);

/// One network vote per classifiable series of the study. PT series are
/// skipped, MG series go to the CR backend, series without a configured
/// backend are skipped.
vote_set network_vote_set(const study_bundle& study, const backend_map& backends,
                          const mapping_database& db);

}  // namespace studyroute

#endif  // STUDYROUTE_IMAGING_HPP
