#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdrl/checkpoint.hpp"
#include "fdrl/errors.hpp"

using namespace fdrl;

namespace {

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.config_hash = 0x0123456789abcdefULL;
    c.step = 42;
    c.config_text = "N=4\nM=8\n";
    c.actor.architecture = 7;
    c.actor.params = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    c.actor.adam = AdamState(5);
    c.actor.adam.m.setConstant(0.25);
    c.actor.adam.step = 3;
    c.critic.architecture = 9;
    c.critic.params = Eigen::VectorXd::Constant(3, 1e-300);
    c.critic.adam = AdamState(3);
    c.rng_state = "12345 678";
    return c;
}

std::string bytes_of(const Checkpoint& c) {
    std::ostringstream out(std::ios::binary);
    write_checkpoint(out, c);
    return out.str();
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
    const Checkpoint c = sample_checkpoint();
    const std::string bytes = bytes_of(c);
    std::istringstream in(bytes, std::ios::binary);
    const Checkpoint back = read_checkpoint(in);
    EXPECT_EQ(back.config_hash, c.config_hash);
    EXPECT_EQ(back.step, 42);
    EXPECT_EQ(back.config_text, c.config_text);
    EXPECT_EQ(back.actor.params, c.actor.params);
    EXPECT_EQ(back.actor.adam.m, c.actor.adam.m);
    EXPECT_EQ(back.actor.adam.step, 3);
    EXPECT_EQ(back.critic.params, c.critic.params);
    EXPECT_EQ(back.rng_state, c.rng_state);
    EXPECT_EQ(bytes_of(back), bytes);
}

TEST(Checkpoint, LayoutIsLittleEndian) {
    const std::string b = bytes_of(sample_checkpoint());
    EXPECT_EQ(b.substr(0, 8), "FDIVCKPT");
    EXPECT_EQ(static_cast<unsigned char>(b[8]), 1u);  // version, low byte first
    EXPECT_EQ(static_cast<unsigned char>(b[12]), 0xefu);  // config hash
    EXPECT_EQ(static_cast<unsigned char>(b[20]), 42u);    // step
    // magic + version + hash + step + string length + text
    // + two networks (arch, count, 3 vectors, step) + rng string
    const std::size_t expected = 8 + 4 + 8 + 8 + 8 + 8 + (8 + 8 + 3 * 5 * 8 + 8) + (8 + 8 + 3 * 3 * 8 + 8) + 8 + 9;
    EXPECT_EQ(b.size(), expected);
}

TEST(Checkpoint, RejectsCorruptInput) {
    std::string b = bytes_of(sample_checkpoint());
    {
        std::string bad = b;
        bad[0] = 'X';
        std::istringstream in(bad);
        EXPECT_THROW(read_checkpoint(in), FormatError);
    }
    {
        std::string bad = b;
        bad[8] = 2;
        std::istringstream in(bad);
        EXPECT_THROW(read_checkpoint(in), FormatError);
    }
    for (std::size_t cut : {std::size_t{4}, std::size_t{30}, b.size() - 1}) {
        std::istringstream in(b.substr(0, cut));
        EXPECT_THROW(read_checkpoint(in), FormatError) << cut;
    }
    Checkpoint mismatched = sample_checkpoint();
    mismatched.actor.adam = AdamState(2);
    std::ostringstream out;
    EXPECT_THROW(write_checkpoint(out, mismatched), ContractError);
}

TEST(Checkpoint, FilesAreWrittenAtomically) {
    const auto dir = std::filesystem::temp_directory_path() / "fdrl_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "c.bin").string();
    save_checkpoint(path, sample_checkpoint());
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    EXPECT_EQ(load_checkpoint(path).step, 42);
    EXPECT_THROW(load_checkpoint((dir / "missing.bin").string()), FormatError);
    std::filesystem::remove_all(dir);
}
