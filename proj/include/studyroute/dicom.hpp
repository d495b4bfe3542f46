#ifndef STUDYROUTE_DICOM_HPP
#define STUDYROUTE_DICOM_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace studyroute::dicom {

struct tag {
    std::uint16_t group = 0;
    std::uint16_t element = 0;
    auto operator<=>(const tag&) const = default;
};

// Tags the routing engine reads.
inline constexpr tag kTransferSyntaxUid{0x0002, 0x0010};
inline constexpr tag kModality{0x0008, 0x0060};
inline constexpr tag kModalitiesInStudy{0x0008, 0x0061};
inline constexpr tag kStudyDescription{0x0008, 0x1030};
inline constexpr tag kProcedureCodeSequence{0x0008, 0x1032};
inline constexpr tag kSeriesDescription{0x0008, 0x103E};
inline constexpr tag kCodeValue{0x0008, 0x0100};
inline constexpr tag kBodyPartExamined{0x0018, 0x0015};
inline constexpr tag kProtocolName{0x0018, 0x1030};
inline constexpr tag kStudyInstanceUid{0x0020, 0x000D};
inline constexpr tag kSeriesInstanceUid{0x0020, 0x000E};
inline constexpr tag kInstanceNumber{0x0020, 0x0013};
inline constexpr tag kNumberOfFrames{0x0028, 0x0008};
inline constexpr tag kSamplesPerPixel{0x0028, 0x0002};
inline constexpr tag kRows{0x0028, 0x0010};
inline constexpr tag kColumns{0x0028, 0x0011};
inline constexpr tag kBitsAllocated{0x0028, 0x0100};
inline constexpr tag kPixelRepresentation{0x0028, 0x0103};
inline constexpr tag kRequestedProcedureDescription{0x0032, 0x1060};
inline constexpr tag kPixelData{0x7FE0, 0x0010};

struct element;

/// A parsed DICOM dataset (flat map of elements, sequences nested).
class data_set {
public:
    bool has(tag t) const;
    /// String value, trailing padding stripped. Absent when the element is
    /// missing or empty (DICOM type 2 empties read as absent).
    std::optional<std::string> text(tag t) const;
    /// Integer value from binary (US/UL/SS/SL) or numeric-string elements.
    std::optional<long> integer(tag t) const;
    const std::vector<data_set>* sequence(tag t) const;
    const std::vector<std::uint8_t>* raw(tag t) const;

    void insert(tag t, element e);

    /// An element's declared length overran the file; everything parsed up
    /// to that point is kept.
    bool truncated = false;
    /// Pixel data is present but encapsulated (compressed transfer syntax).
    bool encapsulated_pixels = false;

private:
    std::map<tag, element> elements_;
};

struct element {
    std::string vr;  ///< two-character VR; empty when implicit and unknown
    std::vector<std::uint8_t> bytes;
    std::vector<data_set> items;  ///< SQ items
};

/// Parse one DICOM Part-10 file (128-byte preamble + "DICM"). Supports the
/// implicit and explicit little-endian transfer syntaxes; datasets of
/// compressed syntaxes parse for metadata with encapsulated_pixels set.
/// Files that are not DICOM or use a big-endian syntax raise load_error.
data_set read_file(const std::filesystem::path& path);

/// Same, from memory.
data_set parse(const std::vector<std::uint8_t>& bytes);

}  // namespace studyroute::dicom

#endif  // STUDYROUTE_DICOM_HPP
