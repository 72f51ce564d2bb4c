#include "numaff/checkpoint.hpp"

#include <bit>

#include "numaff/image.hpp"

namespace numaff {

namespace {

template <typename U>
void put_le(std::string& out, U v) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) { put_le(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    explicit Reader(std::string_view b) : bytes_(b) {}

    template <typename U>
    U get(const char* what) {
        if (bytes_.size() - pos_ < sizeof(U))
            throw Error(Errc::truncated, std::string("checkpoint truncated while reading ") + what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    float get_f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string encode_checkpoint(const SiameseModel& model, const TrainingMeta& meta) {
    validate_model(model);
    std::string out = "SIAM";
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.preset));
    put_le<std::uint64_t>(out, model.seed);
    put_le<std::uint32_t>(out, meta.epochs_run);
    put_f32(out, meta.final_loss);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.size()));
    for (const Tensor& t : model.params) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        for (float v : t.data()) put_f32(out, v);
    }
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < 4) throw Error(Errc::truncated, "checkpoint shorter than its magic");
    if (bytes.substr(0, 4) != "SIAM") throw Error(Errc::bad_magic, "checkpoint magic is not SIAM");
    Reader r(bytes.substr(4));
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion)
        throw Error(Errc::bad_version, "checkpoint version " + std::to_string(version) +
                                           " unsupported (expected " +
                                           std::to_string(kCheckpointVersion) + ")");
    Checkpoint ck;
    const auto preset_id = r.get<std::uint32_t>("preset id");
    ck.model.preset = static_cast<Preset>(preset_id);
    const auto shapes = parameter_shapes(architecture(ck.model.preset));
    ck.model.seed = r.get<std::uint64_t>("seed");
    ck.meta.epochs_run = r.get<std::uint32_t>("epochs run");
    ck.meta.final_loss = r.get_f32("final loss");

    const auto count = r.get<std::uint32_t>("tensor count");
    if (count != shapes.size())
        throw Error(Errc::shape_mismatch, "checkpoint holds " + std::to_string(count) +
                                              " tensors, preset expects " + std::to_string(shapes.size()));
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto rank = r.get<std::uint32_t>("tensor rank");
        if (rank > 4) throw Error(Errc::shape_mismatch, "checkpoint tensor rank exceeds 4");
        Shape shape;
        for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.get<std::uint32_t>("tensor extent"));
        if (shape != shapes[t])
            throw Error(Errc::shape_mismatch, "checkpoint tensor " + std::to_string(t) + " has shape " +
                                                  shape_str(shape) + ", preset expects " +
                                                  shape_str(shapes[t]));
        const std::size_t n = shape_numel(shape);
        if (r.remaining() / 4 < n)
            throw Error(Errc::truncated, "checkpoint truncated inside tensor " + std::to_string(t));
        std::vector<float> data(n);
        for (float& v : data) v = r.get_f32("tensor data");
        ck.model.params.emplace_back(std::move(shape), std::move(data));
    }
    if (r.remaining() != 0)
        throw Error(Errc::decode, "checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
    validate_model(ck.model);
    return ck;
}

void save_checkpoint(const SiameseModel& model, const TrainingMeta& meta,
                     const std::filesystem::path& path) {
    write_file(path, encode_checkpoint(model, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    try {
        return decode_checkpoint(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

} // namespace numaff
