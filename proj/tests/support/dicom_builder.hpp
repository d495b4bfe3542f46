#ifndef STUDYROUTE_TESTS_DICOM_BUILDER_HPP
#define STUDYROUTE_TESTS_DICOM_BUILDER_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "studyroute/dicom.hpp"

namespace studyroute::testing {

/// Writes explicit-VR little-endian Part-10 files for fixtures.
class dicom_builder {
public:
    dicom_builder& text(dicom::tag t, std::string_view vr, std::string_view value);
    dicom_builder& us(dicom::tag t, std::uint16_t value);
    /// Procedure Code Sequence with a single item holding the code value.
    dicom_builder& procedure_code(std::string_view code);
    /// Uncompressed OW pixel data, one or more frames of uint16 samples.
    dicom_builder& pixels_u16(std::span<const std::uint16_t> samples);

    std::vector<std::uint8_t> build() const;
    void write(const std::filesystem::path& path) const;
    /// Writes the file with its last `drop_bytes` bytes removed (corrupt
    /// pixel payload fixtures).
    void write_truncated(const std::filesystem::path& path, std::size_t drop_bytes) const;

private:
    struct raw_element {
        dicom::tag t;
        std::string vr;
        std::vector<std::uint8_t> bytes;
    };
    std::vector<raw_element> elements_;
};

/// One synthetic series file with the standard routing tags filled in.
struct series_file_spec {
    std::string study_uid;
    std::string series_uid;
    std::string modality = "CT";
    std::string study_description;    // empty = absent
    std::string series_description;   // empty = absent
    std::string procedure_code;       // empty = absent
    std::string body_part_examined;   // empty = absent
    std::string protocol_name;        // empty = absent
    int instance_number = 1;
    int rows = 0;                     // pixels written when rows*cols > 0
    int cols = 0;
    int frames = 1;
};

dicom_builder make_series_file(const series_file_spec& spec);

}  // namespace studyroute::testing

#endif  // STUDYROUTE_TESTS_DICOM_BUILDER_HPP
