#include <gtest/gtest.h>

#include "support.hpp"

using namespace sept;

namespace {

EncoderConfig small_config(std::uint64_t seed = 5, std::size_t d = 8) {
    EncoderConfig c;
    c.seed = seed;
    c.vocab = 256;
    c.dim = d;
    c.hidden = 16;
    c.max_len = 12;
    return c;
}

}  // namespace

TEST(Base64, RoundTripsDoubleBlobsExactly) {
    const Vec v{0.0, -0.0, 1.0 / 3.0, -1e-308, 6.02214076e23, std::numeric_limits<double>::denorm_min()};
    const Vec back = decode_f64_blob(encode_f64_blob(v));
    ASSERT_EQ(back.size(), v.size());
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_EQ(std::memcmp(&back[k], &v[k], 8), 0);
    EXPECT_EQ(detail::base64_encode({'M', 'a', 'n'}), "TWFu");
    EXPECT_EQ(detail::base64_encode({'M'}), "TQ==");
    EXPECT_THROW(detail::base64_decode("T!=="), Error);
}

TEST(Tokenizer, SplitsOnPunctuationAndLowercases) {
    const Tokenizer t(8192, 32);
    EXPECT_EQ(t.words("Dog-Bark,  LOUD!"), (std::vector<std::string>{"dog", "bark", "loud"}));
    EXPECT_EQ(t.tokenize("dog bark"), t.tokenize("DOG   bark."));
    EXPECT_EQ(t.token_id("dog"), fnv1a64("dog") % 8192);
    EXPECT_THROW(t.tokenize(" ,. "), Error);
}

TEST(Tokenizer, TruncatesToMaxLength) {
    const Tokenizer t(100, 3);
    EXPECT_EQ(t.tokenize("a b c d e").size(), 3u);
}

TEST(PromptTokens, ContextSlotsComeFirstAndTailIsTruncated) {
    const std::vector<TokenId> ids{4, 5, 6, 7};
    const auto p = PromptTokens::with_context(3, ids, 5);
    ASSERT_EQ(p.slots.size(), 5u);
    for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(p.slots[m], Slot::learnable(m));
    EXPECT_EQ(p.slots[3], Slot::fixed(4));
    EXPECT_EQ(p.slots[4], Slot::fixed(5));
    EXPECT_THROW(PromptTokens::with_context(5, ids, 5), Error);
    EXPECT_FALSE(PromptTokens::fixed_only(ids).has_learnable());
}

TEST(FrozenEncoder, OutputsAreUnitNormAndDeterministic) {
    const auto enc = FrozenEncoder::create(small_config());
    const auto again = FrozenEncoder::create(small_config());
    const ContextMatrix ctx = ContextMatrix::random(3, 8, SeededRng(1), 0.5);
    for (const char* text : {"dog", "church bells", "a b c d e f g h i j k l m n"}) {
        const Vec z = enc.encode(learnable_prompt(enc, text, 3), ctx.values());
        EXPECT_NEAR(norm2(z), 1.0, 1e-14);
        EXPECT_EQ(z, again.encode(learnable_prompt(again, text, 3), ctx.values()));
    }
    EXPECT_EQ(enc.weight_hash(), again.weight_hash());
    EXPECT_NE(enc.weight_hash(), FrozenEncoder::create(small_config(6)).weight_hash());
}

TEST(FrozenEncoder, GoldenEmbeddingForSeed42) {
    EncoderConfig c;
    c.seed = 42;
    c.dim = 8;
    const auto enc = FrozenEncoder::create(c);
    const Vec z = template_embedding(enc, "{class}", "a");
    const Vec golden{-0.056327299868050677, 0.21655385737987998, 0.79659930346529328, -0.11331910835421879,
                     0.11072178277560857,   -0.1661836527672047, -0.36502960196529105, 0.35971803069193636};
    ASSERT_EQ(z.size(), golden.size());
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(z[k], golden[k], 1e-12) << "coordinate " << k;
    EXPECT_EQ(hex64(enc.weight_hash()), "8d618449984fa347");
}

TEST(FrozenEncoder, RejectsBadPrompts) {
    const auto enc = FrozenEncoder::create(small_config());
    EXPECT_THROW(enc.encode(PromptTokens{}, Mat()), Error);
    const auto p = learnable_prompt(enc, "dog", 3);
    EXPECT_THROW(enc.encode(p, Mat(2, 8, 0.1)), Error);
    EXPECT_THROW(enc.encode(p, Mat(3, 7, 0.1)), Error);
}

TEST(FrozenEncoder, VjpMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto enc = FrozenEncoder::create(small_config(seed));
        SeededRng rng(100 + seed);
        const ContextMatrix ctx = ContextMatrix::random(3, 8, rng.split(1), 0.5);
        Vec upstream(8);
        for (double& v : upstream) v = rng.normal();
        const auto prompt = learnable_prompt(enc, "glass breaking loudly", 3);
        const Mat analytic = enc.encode_vjp(prompt, ctx.values(), upstream);
        const Mat fd = test::finite_difference(ctx, [&](const ContextMatrix& c) {
            return dot(upstream, enc.encode(prompt, c.values()));
        });
        for (std::size_t k = 0; k < fd.size(); ++k) {
            const double a = analytic.values()[k];
            EXPECT_LE(std::abs(a - fd.values()[k]) / (1.0 + std::abs(a)), 1e-6) << "seed " << seed << " entry " << k;
        }
    }
}

TEST(FrozenEncoder, VjpOfRepeatedContextRowsAccumulates) {
    const auto enc = FrozenEncoder::create(small_config());
    PromptTokens p;
    p.slots = {Slot::learnable(0), Slot::learnable(0), Slot::fixed(3)};
    const ContextMatrix ctx = ContextMatrix::random(1, 8, SeededRng(2), 0.5);
    const Vec up{1, 0, 0, 0, 0, 0, 0, 0};
    const Mat analytic = enc.encode_vjp(p, ctx.values(), up);
    const Mat fd = test::finite_difference(ctx, [&](const ContextMatrix& c) { return enc.encode(p, c.values())[0]; });
    EXPECT_LE(test::relative_error(analytic, fd), 1e-6);
}

TEST(FrozenEncoder, FixedOnlyPromptsHaveZeroGradient) {
    const auto enc = FrozenEncoder::create(small_config());
    const auto p = PromptTokens::fixed_only(enc.tokenize("siren"));
    const Mat g = enc.encode_vjp(p, Mat(2, 8, 0.3), Vec(8, 1.0));
    EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(FrozenEncoder, SerializationRoundTrips) {
    const auto enc = FrozenEncoder::create(small_config(9));
    const json j = enc.to_json();
    const auto back = FrozenEncoder::from_json(json::parse(j.dump()));
    EXPECT_EQ(back.weight_hash(), enc.weight_hash());
    EXPECT_EQ(back.to_json(), j);
    const ContextMatrix ctx = ContextMatrix::random(2, 8, SeededRng(3), 0.2);
    EXPECT_EQ(back.encode(learnable_prompt(back, "rain", 2), ctx.values()),
              enc.encode(learnable_prompt(enc, "rain", 2), ctx.values()));
}

TEST(FrozenEncoder, ConfigJsonRoundTrips) {
    EncoderConfig c = small_config(11);
    c.architecture = Architecture::pool_identity;
    EXPECT_EQ(encoder_config_from_json(to_json(c)), c);
    EXPECT_THROW(architecture_from_string("transformer"), Error);
}

TEST(FrozenEncoder, IdentityArchitectureNormalisesTheMeanEmbedding) {
    EncoderConfig c = small_config();
    c.architecture = Architecture::pool_identity;
    Vec e0(8, 0.0), e1(8, 0.0);
    e0[0] = 1.0;
    e1[1] = 1.0;
    const auto enc = FrozenEncoder::with_injected_rows(c, {{"alpha", e0}, {"beta", e1}});
    EXPECT_EQ(template_embedding(enc, "{class}", "alpha"), e0);
    const Vec both = template_embedding(enc, "{class}", "alpha beta");
    EXPECT_NEAR(both[0], 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(both[1], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(FrozenEncoder, InjectionRejectsMultiTokenWords) {
    const auto c = small_config();
    EXPECT_THROW(FrozenEncoder::with_injected_rows(c, {{"two words", Vec(8, 1.0)}}), Error);
    EXPECT_THROW(FrozenEncoder::with_injected_rows(c, {{"word", Vec(3, 1.0)}}), Error);
}
