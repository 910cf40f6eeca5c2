#include "fdrl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fdrl/errors.hpp"

namespace fdrl {

namespace {

constexpr std::array<char, 8> kMagic{'F', 'D', 'I', 'V', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(bytes, sizeof(U));
}

template <typename T>
T get(std::istream& in) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    unsigned char bytes[sizeof(U)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(U));
    if (!in) throw FormatError("checkpoint truncated");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (1ULL << 32)) throw FormatError("checkpoint string too long");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw FormatError("checkpoint truncated");
    return s;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v[i]);
}

Eigen::VectorXd get_vector(std::istream& in, std::uint64_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = get<double>(in);
    return v;
}

void put_network(std::ostream& out, const NetworkSnapshot& net) {
    put<std::uint64_t>(out, net.architecture);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(net.params.size()));
    put_vector(out, net.params);
    put_vector(out, net.adam.m);
    put_vector(out, net.adam.v);
    put<std::int64_t>(out, net.adam.step);
}

NetworkSnapshot get_network(std::istream& in) {
    NetworkSnapshot net;
    net.architecture = get<std::uint64_t>(in);
    const auto n = get<std::uint64_t>(in);
    if (n > (1ULL << 28)) throw FormatError("checkpoint parameter count too large");
    net.params = get_vector(in, n);
    net.adam.m = get_vector(in, n);
    net.adam.v = get_vector(in, n);
    net.adam.step = get<std::int64_t>(in);
    return net;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    if (ckpt.actor.adam.m.size() != ckpt.actor.params.size() ||
        ckpt.critic.adam.m.size() != ckpt.critic.params.size())
        throw ContractError("checkpoint optimizer state does not match parameters");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, ckpt.config_hash);
    put<std::int64_t>(out, ckpt.step);
    put_string(out, ckpt.config_text);
    put_network(out, ckpt.actor);
    put_network(out, ckpt.critic);
    put_string(out, ckpt.rng_state);
}

Checkpoint read_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw FormatError("not a checkpoint file");
    if (get<std::uint32_t>(in) != kVersion) throw FormatError("unsupported checkpoint version");
    Checkpoint ckpt;
    ckpt.config_hash = get<std::uint64_t>(in);
    ckpt.step = get<std::int64_t>(in);
    ckpt.config_text = get_string(in);
    ckpt.actor = get_network(in);
    ckpt.critic = get_network(in);
    ckpt.rng_state = get_string(in);
    return ckpt;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw FormatError("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, target);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ostringstream buffer(std::ios::binary);
    write_checkpoint(buffer, ckpt);
    write_file_atomic(path, buffer.str());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

}  // namespace fdrl
