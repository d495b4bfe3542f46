#include "dicom_builder.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace studyroute::testing {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

bool long_form(const std::string& vr) {
    return vr == "OB" || vr == "OW" || vr == "OF" || vr == "SQ" || vr == "UT" || vr == "UN";
}

void put_element(std::vector<std::uint8_t>& out, dicom::tag t, const std::string& vr,
                 const std::vector<std::uint8_t>& bytes) {
    put_u16(out, t.group);
    put_u16(out, t.element);
    out.push_back(static_cast<std::uint8_t>(vr[0]));
    out.push_back(static_cast<std::uint8_t>(vr[1]));
    if (long_form(vr)) {
        put_u16(out, 0);
        put_u32(out, static_cast<std::uint32_t>(bytes.size()));
    } else {
        if (bytes.size() > 0xFFFF) throw std::runtime_error("value too long for short VR");
        put_u16(out, static_cast<std::uint16_t>(bytes.size()));
    }
    out.insert(out.end(), bytes.begin(), bytes.end());
}

std::vector<std::uint8_t> padded_text(std::string_view value, char pad) {
    std::vector<std::uint8_t> bytes(value.begin(), value.end());
    if (bytes.size() % 2) bytes.push_back(static_cast<std::uint8_t>(pad));
    return bytes;
}

}  // namespace

dicom_builder& dicom_builder::text(dicom::tag t, std::string_view vr, std::string_view value) {
    raw_element e;
    e.t = t;
    e.vr = vr;
    e.bytes = padded_text(value, vr == "UI" ? '\0' : ' ');
    elements_.push_back(std::move(e));
    return *this;
}

dicom_builder& dicom_builder::us(dicom::tag t, std::uint16_t value) {
    raw_element e;
    e.t = t;
    e.vr = "US";
    put_u16(e.bytes, value);
    elements_.push_back(std::move(e));
    return *this;
}

dicom_builder& dicom_builder::procedure_code(std::string_view code) {
    // one defined-length item holding (0008,0100)
    std::vector<std::uint8_t> item;
    put_element(item, dicom::kCodeValue, "SH", padded_text(code, ' '));

    raw_element e;
    e.t = dicom::kProcedureCodeSequence;
    e.vr = "SQ";
    put_u16(e.bytes, 0xFFFE);
    put_u16(e.bytes, 0xE000);
    put_u32(e.bytes, static_cast<std::uint32_t>(item.size()));
    e.bytes.insert(e.bytes.end(), item.begin(), item.end());
    elements_.push_back(std::move(e));
    return *this;
}

dicom_builder& dicom_builder::pixels_u16(std::span<const std::uint16_t> samples) {
    raw_element e;
    e.t = dicom::kPixelData;
    e.vr = "OW";
    e.bytes.reserve(samples.size() * 2);
    for (std::uint16_t s : samples) put_u16(e.bytes, s);
    elements_.push_back(std::move(e));
    return *this;
}

std::vector<std::uint8_t> dicom_builder::build() const {
    std::vector<std::uint8_t> out(128, 0);
    out.push_back('D');
    out.push_back('I');
    out.push_back('C');
    out.push_back('M');
    put_element(out, dicom::kTransferSyntaxUid, "UI", padded_text("1.2.840.10008.1.2.1", '\0'));

    std::vector<raw_element> sorted = elements_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const raw_element& a, const raw_element& b) { return a.t < b.t; });
    for (const auto& e : sorted) put_element(out, e.t, e.vr, e.bytes);
    return out;
}

void dicom_builder::write(const std::filesystem::path& path) const {
    std::vector<std::uint8_t> bytes = build();
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void dicom_builder::write_truncated(const std::filesystem::path& path,
                                    std::size_t drop_bytes) const {
    std::vector<std::uint8_t> bytes = build();
    if (drop_bytes >= bytes.size()) throw std::runtime_error("dropping whole file");
    bytes.resize(bytes.size() - drop_bytes);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

dicom_builder make_series_file(const series_file_spec& spec) {
    dicom_builder b;
    b.text(dicom::kStudyInstanceUid, "UI", spec.study_uid);
    b.text(dicom::kSeriesInstanceUid, "UI", spec.series_uid);
    b.text(dicom::kModality, "CS", spec.modality);
    b.text(dicom::kInstanceNumber, "IS", std::to_string(spec.instance_number));
    if (!spec.study_description.empty())
        b.text(dicom::kStudyDescription, "LO", spec.study_description);
    if (!spec.series_description.empty())
        b.text(dicom::kSeriesDescription, "LO", spec.series_description);
    if (!spec.procedure_code.empty()) b.procedure_code(spec.procedure_code);
    if (!spec.body_part_examined.empty())
        b.text(dicom::kBodyPartExamined, "CS", spec.body_part_examined);
    if (!spec.protocol_name.empty()) b.text(dicom::kProtocolName, "LO", spec.protocol_name);
    if (spec.rows > 0 && spec.cols > 0) {
        b.us(dicom::kRows, static_cast<std::uint16_t>(spec.rows));
        b.us(dicom::kColumns, static_cast<std::uint16_t>(spec.cols));
        b.us(dicom::kBitsAllocated, 16);
        b.us(dicom::kPixelRepresentation, 0);
        if (spec.frames != 1)
            b.text(dicom::kNumberOfFrames, "IS", std::to_string(spec.frames));
        std::vector<std::uint16_t> samples(
            static_cast<std::size_t>(spec.rows) * spec.cols * spec.frames);
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples[i] = static_cast<std::uint16_t>((i * 37 + 11) % 4096);
        b.pixels_u16(samples);
    }
    return b;
}

}  // namespace studyroute::testing
