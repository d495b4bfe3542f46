#include "studyroute/dicom.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "studyroute/errors.hpp"

namespace studyroute::dicom {

namespace {

constexpr tag kItem{0xFFFE, 0xE000};
constexpr tag kItemDelimiter{0xFFFE, 0xE00D};
constexpr tag kSequenceDelimiter{0xFFFE, 0xE0DD};
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;
constexpr int kMaxSequenceDepth = 16;

const char* kImplicitLE = "1.2.840.10008.1.2";
const char* kExplicitLE = "1.2.840.10008.1.2.1";
const char* kExplicitBE = "1.2.840.10008.1.2.2";

bool has_long_length(const std::string& vr) {
    return vr == "OB" || vr == "OW" || vr == "OF" || vr == "OD" || vr == "OL" || vr == "SQ" ||
           vr == "UC" || vr == "UR" || vr == "UT" || vr == "UN";
}

// VRs of the tags this reader interprets, for implicit-VR files.
std::string implicit_vr(tag t) {
    if (t == kRows || t == kColumns || t == kBitsAllocated || t == kPixelRepresentation ||
        t == kSamplesPerPixel)
        return "US";
    if (t == kProcedureCodeSequence) return "SQ";
    if (t == kPixelData) return "OW";
    return "";
}

class reader {
public:
    reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    data_set run() {
        if (size_ < 132 || std::memcmp(data_ + 128, "DICM", 4) != 0)
            throw load_error("dicom: missing DICM magic");
        pos_ = 132;

        // File meta information is always explicit little endian.
        data_set meta;
        explicit_vr_ = true;
        while (pos_ + 8 <= size_) {
            tag t = peek_tag();
            if (t.group != 0x0002) break;
            if (!read_element(meta, 0)) break;
        }
        std::string transfer_syntax = meta.text(kTransferSyntaxUid).value_or(kExplicitLE);
        if (transfer_syntax == kImplicitLE) {
            explicit_vr_ = false;
        } else if (transfer_syntax.rfind(kExplicitBE, 0) == 0) {
            throw load_error("dicom: unsupported big-endian transfer syntax");
        } else {
            explicit_vr_ = true;  // all remaining syntaxes keep an explicit LE dataset
        }
        encapsulated_ = transfer_syntax != kImplicitLE && transfer_syntax != kExplicitLE;

        data_set ds;
        while (pos_ + 8 <= size_) {
            if (!read_element(ds, 0)) break;
        }
        if (encapsulated_ && ds.has(kPixelData)) ds.encapsulated_pixels = true;
        return ds;
    }

private:
    tag peek_tag() const {
        return {read_u16_at(pos_), read_u16_at(pos_ + 2)};
    }

    std::uint16_t read_u16_at(std::size_t p) const {
        return static_cast<std::uint16_t>(data_[p] | (data_[p + 1] << 8));
    }
    std::uint32_t read_u32_at(std::size_t p) const {
        return static_cast<std::uint32_t>(data_[p] | (data_[p + 1] << 8) |
                                          (data_[p + 2] << 16) |
                                          (static_cast<std::uint32_t>(data_[p + 3]) << 24));
    }

    // Reads one element into ds. Returns false when parsing must stop
    // (truncation or a delimiter in an enclosing scope).
    bool read_element(data_set& ds, int depth, std::size_t limit = 0) {
        std::size_t end = limit ? limit : size_;
        if (pos_ + 8 > end) return false;

        tag t = peek_tag();
        if (t == kItemDelimiter || t == kSequenceDelimiter) return false;
        pos_ += 4;

        std::string vr;
        std::uint32_t length = 0;
        if (t.group == 0xFFFE) {
            // delimitation items never carry a VR
            length = read_u32_at(pos_);
            pos_ += 4;
        } else if (explicit_vr_) {
            vr.assign(reinterpret_cast<const char*>(data_ + pos_), 2);
            pos_ += 2;
            if (has_long_length(vr)) {
                pos_ += 2;  // reserved
                if (pos_ + 4 > end) {
                    ds.truncated = true;
                    return false;
                }
                length = read_u32_at(pos_);
                pos_ += 4;
            } else {
                if (pos_ + 2 > end) {
                    ds.truncated = true;
                    return false;
                }
                length = read_u16_at(pos_);
                pos_ += 2;
            }
        } else {
            vr = implicit_vr(t);
            length = read_u32_at(pos_);
            pos_ += 4;
        }

        bool is_sequence = vr == "SQ" ||
                           (!explicit_vr_ && vr.empty() && length == kUndefinedLength);
        if (is_sequence) {
            element e;
            e.vr = "SQ";
            if (depth < kMaxSequenceDepth) {
                if (!read_sequence(e, ds, depth + 1, length)) {
                    ds.insert(t, std::move(e));
                    return false;
                }
            } else if (!skip_sequence(length)) {
                ds.truncated = true;
                return false;
            }
            ds.insert(t, std::move(e));
            return true;
        }

        if (length == kUndefinedLength) {
            // Undefined-length non-SQ data: encapsulated pixel fragments.
            if (t == kPixelData) ds.encapsulated_pixels = true;
            if (!skip_fragments()) {
                ds.truncated = true;
                return false;
            }
            return true;
        }

        if (pos_ + length > end) {
            ds.truncated = true;
            pos_ = end;
            return false;
        }
        element e;
        e.vr = std::move(vr);
        e.bytes.assign(data_ + pos_, data_ + pos_ + length);
        pos_ += length;
        ds.insert(t, std::move(e));
        return true;
    }

    bool read_sequence(element& e, data_set& parent, int depth, std::uint32_t length) {
        bool defined = length != kUndefinedLength;
        std::size_t limit = defined ? std::min(pos_ + length, size_) : size_;
        if (defined && pos_ + length > size_) {
            parent.truncated = true;
            pos_ = size_;
            return false;
        }
        while (pos_ + 8 <= limit) {
            tag t = peek_tag();
            if (t == kSequenceDelimiter) {
                pos_ += 8;
                return true;
            }
            if (t != kItem) return false;
            pos_ += 4;
            std::uint32_t item_len = read_u32_at(pos_);
            pos_ += 4;
            data_set item;
            std::size_t item_end = item_len == kUndefinedLength ? limit : pos_ + item_len;
            if (item_end > size_) {
                parent.truncated = true;
                return false;
            }
            while (pos_ + 8 <= item_end) {
                tag inner = peek_tag();
                if (inner == kItemDelimiter) {
                    pos_ += 8;
                    break;
                }
                if (!read_element(item, depth, item_end)) break;
            }
            if (item_len != kUndefinedLength) pos_ = item_end;
            if (item.truncated) parent.truncated = true;
            e.items.push_back(std::move(item));
        }
        if (defined) {
            pos_ = limit;
            return true;
        }
        return false;  // undefined-length sequence without delimiter
    }

    bool skip_sequence(std::uint32_t length) {
        if (length != kUndefinedLength) {
            if (pos_ + length > size_) return false;
            pos_ += length;
            return true;
        }
        return skip_fragments();
    }

    // Skips undefined-length item runs up to the sequence delimiter.
    bool skip_fragments() {
        while (pos_ + 8 <= size_) {
            tag t = peek_tag();
            pos_ += 4;
            std::uint32_t len = read_u32_at(pos_);
            pos_ += 4;
            if (t == kSequenceDelimiter) return true;
            if (t != kItem || len == kUndefinedLength) return false;
            if (pos_ + len > size_) return false;
            pos_ += len;
        }
        return false;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    bool explicit_vr_ = true;
    bool encapsulated_ = false;
};

std::string strip_padding(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

}  // namespace

void data_set::insert(tag t, element e) { elements_[t] = std::move(e); }

bool data_set::has(tag t) const { return elements_.count(t) > 0; }

std::optional<std::string> data_set::text(tag t) const {
    auto it = elements_.find(t);
    if (it == elements_.end()) return std::nullopt;
    const element& e = it->second;
    std::string s(reinterpret_cast<const char*>(e.bytes.data()), e.bytes.size());
    s = strip_padding(std::move(s));
    if (s.empty()) return std::nullopt;
    return s;
}

std::optional<long> data_set::integer(tag t) const {
    auto it = elements_.find(t);
    if (it == elements_.end()) return std::nullopt;
    const element& e = it->second;
    if (e.vr == "US" && e.bytes.size() >= 2)
        return static_cast<long>(e.bytes[0] | (e.bytes[1] << 8));
    if (e.vr == "SS" && e.bytes.size() >= 2)
        return static_cast<long>(static_cast<std::int16_t>(e.bytes[0] | (e.bytes[1] << 8)));
    if (e.vr == "UL" && e.bytes.size() >= 4)
        return static_cast<long>(static_cast<std::uint32_t>(
            e.bytes[0] | (e.bytes[1] << 8) | (e.bytes[2] << 16) |
            (static_cast<std::uint32_t>(e.bytes[3]) << 24)));
    if (e.vr == "SL" && e.bytes.size() >= 4)
        return static_cast<long>(static_cast<std::int32_t>(
            e.bytes[0] | (e.bytes[1] << 8) | (e.bytes[2] << 16) |
            (static_cast<std::uint32_t>(e.bytes[3]) << 24)));
    // numeric string (IS) or implicit unknown holding text
    auto s = text(t);
    if (!s) return std::nullopt;
    try {
        return std::stol(*s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

const std::vector<data_set>* data_set::sequence(tag t) const {
    auto it = elements_.find(t);
    if (it == elements_.end() || it->second.vr != "SQ") return nullptr;
    return &it->second.items;
}

const std::vector<std::uint8_t>* data_set::raw(tag t) const {
    auto it = elements_.find(t);
    if (it == elements_.end()) return nullptr;
    return &it->second.bytes;
}

data_set parse(const std::vector<std::uint8_t>& bytes) {
    reader r(bytes.data(), bytes.size());
    return r.run();
}

data_set read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw load_error("dicom: cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse(bytes);
}

}  // namespace studyroute::dicom
