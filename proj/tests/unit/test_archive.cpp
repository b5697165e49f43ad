#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cvrpdiff/archive.hpp"
#include "cvrpdiff/config.hpp"
#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/pipeline.hpp"
#include "support.hpp"

namespace cvrpdiff {
namespace {

using testing::perturb_params;
using testing::small_config;

Models sample_models() {
  Models m;
  m.config.model = small_config(8, 2, 2);
  m.config.diffusion.T = 40;
  m.config.diffusion.inference_steps = 4;
  m.config.policy.mask_steps = 4;
  m.diffusion = DiffusionModels(m.config, 3);
  m.policy = PolicyModels(m.config.model, 4);
  perturb_params(m.diffusion.gat.params, 1);
  perturb_params(m.diffusion.denoiser.params, 2);
  perturb_params(m.policy.encoder.params, 3);
  perturb_params(m.policy.decoder.params, 4);
  return m;
}

ParameterArchive pack(const Models& m) {
  ParameterArchive a;
  a.config_text = format_config(m.config);
  store_diffusion(a, m.diffusion);
  store_policy(a, m.policy);
  return a;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cvrpdiff_test_" + name);
}

TEST(Archive, RoundTripIsBitExact) {
  const auto m = sample_models();
  auto archive = pack(m);
  auto& tricky = const_cast<nn::ParamSet&>(archive.section("decoder"));
  tricky[0].value(0, 0) = std::numeric_limits<double>::denorm_min();
  tricky[0].value.data()[1] = -0.0;
  tricky[0].value.data()[2] = 1.0 / 3.0;
  const auto path = temp_path("roundtrip.cvd");
  archive.save(path);
  const auto back = ParameterArchive::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.config_text, archive.config_text);
  for (const char* s : {"gat", "denoiser", "masked_encoder", "decoder"}) {
    ASSERT_TRUE(back.has(s)) << s;
    EXPECT_TRUE(back.section(s).bit_equal(archive.section(s))) << s;
  }
  EXPECT_TRUE(std::signbit(back.section("decoder")[0].value.data()[1]));
  EXPECT_EQ(back.serialize(), archive.serialize());
}

TEST(Archive, ReloadedModelsGiveIdenticalSolutions) {
  const auto m = sample_models();
  const auto loaded = load_models(ParameterArchive::deserialize(pack(m).serialize()));
  EXPECT_EQ(loaded.config, m.config);
  EXPECT_TRUE(loaded.diffusion.gat.params.bit_equal(m.diffusion.gat.params));
  EXPECT_TRUE(loaded.policy.decoder.params.bit_equal(m.policy.decoder.params));
  SolveOptions o;
  o.augmentations = 4;
  o.inference_steps = 4;
  o.seed = 8;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto inst = generate_instance(9, k);
    const auto a = solve(inst, m, o);
    const auto b = solve(inst, loaded, o);
    EXPECT_EQ(a.solution, b.solution);
    EXPECT_EQ(a.objective, b.objective);
    const auto pa = predict_mask(inst, m.diffusion, 4, k);
    const auto pb = predict_mask(inst, loaded.diffusion, 4, k);
    EXPECT_TRUE((pa.probabilities.array() == pb.probabilities.array()).all());
  }
}

TEST(Archive, MissingSectionIsNamed) {
  const auto m = sample_models();
  ParameterArchive a;
  a.config_text = format_config(m.config);
  store_diffusion(a, m.diffusion);
  a.put("decoder", m.policy.decoder.params);
  const auto bytes = a.serialize();
  try {
    load_models(ParameterArchive::deserialize(bytes));
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("masked_encoder"), std::string::npos) << e.what();
  }
  EXPECT_THROW(a.section("nothing"), ModelError);
}

TEST(Archive, ShapeMismatchIsModelError) {
  const auto m = sample_models();
  auto a = pack(m);
  auto other = m.config;
  other.model.d = 16;
  other.model.heads = 2;
  a.config_text = format_config(other);
  EXPECT_THROW(load_models(a), ModelError);
  a.config_text = "model.d = x\n";
  EXPECT_THROW(load_models(a), ModelError);
}

TEST(Archive, CorruptBytesAreRejected) {
  const auto bytes = pack(sample_models()).serialize();
  EXPECT_THROW(ParameterArchive::deserialize(""), ModelError);
  EXPECT_THROW(ParameterArchive::deserialize("NOTMAGIC" + bytes.substr(8)), ModelError);
  EXPECT_THROW(ParameterArchive::deserialize(bytes.substr(0, 20)), ModelError);
  EXPECT_THROW(ParameterArchive::deserialize(bytes.substr(0, bytes.size() - 3)), ModelError);
  EXPECT_THROW(ParameterArchive::deserialize(bytes.substr(0, bytes.size() - 8)), ModelError);
  std::string broken = bytes;
  broken[17] = '#';
  EXPECT_THROW(ParameterArchive::deserialize(broken), ModelError);
  EXPECT_THROW(ParameterArchive::load(temp_path("does_not_exist")), std::exception);
}

TEST(Archive, HeaderLayout) {
  ParameterArchive a;
  nn::ParamSet p;
  p.add("w", Matrix::Constant(1, 2, 1.5));
  a.put("s", p);
  const auto bytes = a.serialize();
  ASSERT_GE(bytes.size(), 16u + 16u);
  EXPECT_EQ(bytes.substr(0, 8), "CVDARCH1");
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + i]);
  EXPECT_EQ(bytes.size(), 16u + len + 16u);
  double tail[2];
  std::memcpy(tail, bytes.data() + 16 + len, sizeof tail);
  EXPECT_EQ(tail[0], 1.5);
  EXPECT_EQ(tail[1], 1.5);
}

TEST(Config, FormatParseRoundTrip) {
  TrainConfig c;
  c.model = small_config(24, 3, 4);
  c.diffusion.T = 123;
  c.diffusion.beta1 = 1.0 / 7.0 * 1e-3;
  c.diffusion.symmetric = false;
  c.policy.lr = 3.3e-5;
  c.policy.patience = 2;
  EXPECT_EQ(parse_config(format_config(c)), c);
  EXPECT_EQ(parse_config(format_config(TrainConfig{})), TrainConfig{});
}

TEST(Config, PartialTextKeepsDefaults) {
  const auto c = parse_config("# desk run\nmodel.d = 32  # width\n\n  diffusion.T=200\npolicy.lr = 1e-3\n");
  EXPECT_EQ(c.model.d, 32);
  EXPECT_EQ(c.diffusion.T, 200);
  EXPECT_EQ(c.policy.lr, 1e-3);
  EXPECT_EQ(c.policy.batch, TrainConfig{}.policy.batch);
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_config(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("model.d = 8\nbogus.key = 1\n"), 2u);
  EXPECT_EQ(line_of("model.d = 8\n\n# c\nmodel.heads 4\n"), 4u);
  EXPECT_EQ(line_of("model.d = eight\n"), 1u);
  EXPECT_EQ(line_of("model.d =\n"), 1u);
  EXPECT_EQ(line_of("diffusion.symmetric = maybe\n"), 1u);
  EXPECT_EQ(line_of("model.d = 8.5\n"), 1u);
}

TEST(Config, ValidateRejectsBadValues) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.diffusion.inference_steps = c.diffusion.T + 1;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.model.d = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.policy.lr = 0.0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.diffusion.betaT = 1.5;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Config, ReadFromFile) {
  const auto path = temp_path("config.txt");
  {
    std::ofstream(path) << "model.d = 40\nmodel.heads = 5\n";
  }
  const auto c = read_config(path);
  std::filesystem::remove(path);
  EXPECT_EQ(c.model.d, 40);
  EXPECT_THROW(read_config(temp_path("no_such_config")), InputError);
}

}  // namespace
}  // namespace cvrpdiff
