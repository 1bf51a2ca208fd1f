#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hgda;

namespace {

std::pair<Graph, Graph> small_pair(std::uint64_t seed, double target_a = 3, double target_b = 7) {
    GenSpec s;
    s.num_nodes = 120;
    s.num_classes = 3;
    s.feature_dim = 6;
    s.feature_noise_sigma = 0.8;
    s.seed = seed;
    GenSpec t = s;
    t.homophily_mix = {{1.0, target_a, target_b}};
    t.seed = seed + 1000;
    return generate_pair(s, t);
}

HgdaConfig quick_config(int epochs = 15) {
    HgdaConfig c;
    c.hidden_dims = {16, 8};
    c.epochs = epochs;
    c.lr = 0.01;
    return c;
}

}  // namespace

TEST(Train, LossIdentityEveryEpoch) {
    const auto [s, t] = small_pair(1);
    auto cfg = quick_config();
    cfg.alpha = 0.4;
    cfg.beta = 0.25;
    const auto r = train(s, t, cfg);
    ASSERT_EQ(r.report.epochs.size(), 15u);
    for (const auto& e : r.report.epochs)
        EXPECT_NEAR(e.loss_total, e.loss_h + cfg.alpha * e.loss_s + cfg.beta * e.loss_t, 1e-9);
}

TEST(Train, Deterministic) {
    const auto [s, t] = small_pair(2);
    const auto a = train(s, t, quick_config());
    const auto b = train(s, t, quick_config());
    EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
    auto other = quick_config();
    other.seed = 1;
    EXPECT_NE(to_json(train(s, t, other).report).dump(), to_json(a.report).dump());
}

TEST(Train, IdenticalDomainsAlignToZero) {
    const auto [s, t] = small_pair(3);
    const auto r = train(s, s, quick_config(5));
    for (const auto& e : r.report.epochs) {
        ASSERT_TRUE(e.eval_loss_h.has_value());
        EXPECT_LE(*e.eval_loss_h, 1e-6);
    }
    ASSERT_TRUE(r.report.bounds.has_value());
    EXPECT_LE(r.report.bounds->kl_x, 1e-9);
    EXPECT_LE(r.report.bounds->kl_heterophily_hist, 1e-9);
}

TEST(Train, AlignmentOnlyObjective) {
    const auto [s, t] = small_pair(4);
    auto cfg = quick_config(5);
    cfg.alpha = cfg.beta = 0.0;
    for (const auto& e : train(s, t, cfg).report.epochs) {
        EXPECT_NEAR(e.loss_total, e.loss_h, 1e-12);
        EXPECT_GT(e.loss_s, 0.0);  // still reported
    }
}

TEST(Train, LearnsEasySource) {
    const auto [s, t] = small_pair(5);
    auto cfg = quick_config(60);
    cfg.alpha = 1.0;
    const auto r = train(s, t, cfg);
    EXPECT_GT(*r.report.final_source_accuracy, 0.9);
    EXPECT_LT(r.report.epochs.back().loss_s, r.report.epochs.front().loss_s);
}

TEST(Train, UnlabeledSourceRejected) {
    auto [s, t] = small_pair(6);
    s.labels.reset();
    try {
        train(s, t, quick_config(1));
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_EQ(std::string(e.what()), "source must be labeled");
    }
}

TEST(Train, UnlabeledTargetSkipsAnalysis) {
    auto [s, t] = small_pair(7);
    t.labels.reset();
    const auto r = train(s, t, quick_config(2));
    EXPECT_FALSE(r.report.final_target_accuracy.has_value());
    EXPECT_FALSE(r.report.subgroup.has_value());
    EXPECT_FALSE(r.report.bounds.has_value());
}

TEST(Train, DivergenceNamesTheTerm) {
    auto [s, t] = small_pair(8);
    t.features *= 1e200;
    try {
        train(s, t, quick_config(1));
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("L_H"), std::string::npos) << e.what();
    }
}

TEST(Train, MismatchedDomains) {
    auto [s, t] = small_pair(9);
    t.features = Matrix::Zero(t.num_nodes, 2);
    EXPECT_THROW(train(s, t, quick_config(1)), std::invalid_argument);
}

TEST(Report, MetricsCsv) {
    const auto [s, t] = small_pair(10);
    TrainOptions opts;
    opts.eval_every = 2;
    int seen = 0;
    opts.on_epoch = [&](const EpochRecord&) { ++seen; };
    const auto r = train(s, t, quick_config(5), opts);
    EXPECT_EQ(seen, 5);
    const std::string csv = metrics_csv(r.report);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch,loss_total,loss_H,loss_S,loss_T,src_acc,tgt_acc");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].back(), ',');  // no eval on the first epoch
    EXPECT_NE(rows[1].back(), ',');
    EXPECT_NE(rows[4].back(), ',');  // last epoch always evaluated
}

TEST(Report, JsonShape) {
    const auto [s, t] = small_pair(11);
    const auto j = to_json(train(s, t, quick_config(2)).report);
    for (const char* key : {"config", "seed", "epochs", "final_source_accuracy", "final_target_accuracy", "subgroup",
                            "bound_diagnostics"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_FALSE(j.contains("wall_clock_seconds"));
    EXPECT_TRUE(j["bound_diagnostics"].contains("kl_heterophily_hist"));
}

TEST(Diagnostics, HomophilyShiftMovesHistogramTerm) {
    const auto [s, t] = small_pair(12, 1, 9);
    const auto d = bound_diagnostics(s, t);
    EXPECT_GT(d.kl_heterophily_hist, 0.5);
    EXPECT_GE(d.kl_ax, 0.0);
    EXPECT_GE(d.kl_lx, 0.0);
    const auto same = bound_diagnostics(s, s);
    EXPECT_EQ(same.kl_ax, 0.0);
    EXPECT_EQ(same.kl_x, 0.0);
    EXPECT_EQ(same.kl_lx, 0.0);
    EXPECT_EQ(same.kl_heterophily_hist, 0.0);
}

TEST(Evaluate, SubgroupAccuracy) {
    const auto [s, t] = small_pair(13);
    const auto r = train(s, t, quick_config(3));
    const auto prof = subgroup_accuracy(r.model, s, t);
    ASSERT_EQ(prof.target_accuracy.size(), static_cast<std::size_t>(kHistogramBins));
    const auto e = evaluate(r.model, t);
    EXPECT_DOUBLE_EQ(e.accuracy, *r.report.final_target_accuracy);
}
