#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/sac.hpp"
#include "clgr/store.hpp"

namespace clgr {

// Checkpoint layout (integers little-endian):
//   magic "VLRC" | version u32 = 1 | tensor count u32
//   per tensor: name length u16 | name | rows u32 | cols u32
//   then every tensor's values as f32, row-major, in header order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Mat value;
};

inline std::vector<NamedTensor> collect_tensors(SacTrainer& t) {
    std::vector<NamedTensor> out;
    auto grab = [&](Mat& m, const std::string& name) { out.push_back({name, m}); };
    visit_params(t.actor(), grab);
    visit_params(t.critic1(), grab, "critic1");
    visit_params(t.critic2(), grab, "critic2");
    visit_params(t.target1(), grab, "target1");
    visit_params(t.target2(), grab, "target2");
    Mat la(1, 1);
    la(0, 0) = t.log_alpha();
    out.push_back({"log_alpha", la});
    return out;
}

inline void save_checkpoint(const std::string& path, SacTrainer& trainer) {
    const std::vector<NamedTensor> tensors = collect_tensors(trainer);
    std::string out;
    out += "VLRC";
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        detail::put_u16(out, static_cast<std::uint16_t>(t.name.size()));
        out += t.name;
        detail::put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
        detail::put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
    }
    for (const NamedTensor& t : tensors)
        for (Eigen::Index r = 0; r < t.value.rows(); ++r)
            for (Eigen::Index c = 0; c < t.value.cols(); ++c)
                detail::put_f32(out, static_cast<float>(t.value(r, c)));

    // atomic: write a temp file, then rename over the destination
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open checkpoint for writing: " + tmp);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw DataError("short write to checkpoint: " + tmp);
    }
    std::remove(path.c_str());
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot move checkpoint into place: " + path);
}

/// Loads tensors by name into an already-constructed trainer; shapes must
/// match the trainer's architecture exactly.
inline void load_checkpoint(const std::string& path, SacTrainer& trainer) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    detail::ByteReader r(bytes, path);
    if (r.raw(4, "magic") != "VLRC")
        throw DataError(path + ": bad magic at byte offset 0, expected \"VLRC\"");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t count = r.u32("tensor count");

    struct Header {
        std::string name;
        std::uint32_t rows, cols;
    };
    std::vector<Header> headers;
    for (std::uint32_t i = 0; i < count; ++i) {
        Header h;
        const std::uint16_t len = r.u16("tensor name length");
        h.name = r.raw(len, "tensor name");
        h.rows = r.u32("tensor rows");
        h.cols = r.u32("tensor cols");
        headers.push_back(std::move(h));
    }

    std::vector<NamedTensor> live = collect_tensors(trainer);
    if (live.size() != headers.size())
        throw DataError(path + ": checkpoint holds " + std::to_string(headers.size()) +
                        " tensors, trainer expects " + std::to_string(live.size()));

    std::vector<std::pair<std::string, Mat>> loaded;
    for (const Header& h : headers) {
        Mat m(h.rows, h.cols);
        for (std::uint32_t rr = 0; rr < h.rows; ++rr)
            for (std::uint32_t cc = 0; cc < h.cols; ++cc)
                m(rr, cc) = static_cast<double>(r.f32("tensor value"));
        loaded.emplace_back(h.name, std::move(m));
    }
    if (r.offset() != bytes.size())
        throw DataError(path + ": trailing bytes at offset " + std::to_string(r.offset()));

    auto apply = [&](Mat& dst, const std::string& name) {
        for (auto& [n, m] : loaded) {
            if (n != name) continue;
            if (m.rows() != dst.rows() || m.cols() != dst.cols())
                throw DataError(path + ": tensor " + name + " has shape " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                ", trainer expects " + std::to_string(dst.rows()) + "x" +
                                std::to_string(dst.cols()));
            dst = m;
            return;
        }
        throw DataError(path + ": missing tensor " + name);
    };
    visit_params(trainer.actor(), apply);
    visit_params(trainer.critic1(), apply, "critic1");
    visit_params(trainer.critic2(), apply, "critic2");
    visit_params(trainer.target1(), apply, "target1");
    visit_params(trainer.target2(), apply, "target2");
    Mat la(1, 1);
    apply(la, "log_alpha");
    trainer.set_log_alpha(la(0, 0));
}

}  // namespace clgr
