#include <gtest/gtest.h>

#include <cmath>

#include "genlab/app/metrics_csv.hpp"
#include "test_support.hpp"

namespace genlab {
namespace {

TEST(MetricsCsv, HeaderIsFixed) {
    const std::string csv = format_metrics_csv({MetricsRow{1, "gan", 1.0, 2.0, {}, {}, {}, {}}});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,model,loss_d,loss_g,recon,kl,mode_entropy");
}

TEST(MetricsCsv, VaeRowsLeaveAdversarialFieldsEmpty) {
    StepMetrics m;
    m.iteration = 5;
    m.recon = 41.25;
    m.kl = 3.5;
    const std::string csv = format_metrics_csv({metrics_row(ModelKind::vae, m)});
    EXPECT_EQ(csv, "iteration,model,loss_d,loss_g,recon,kl,mode_entropy\n5,vae,,,41.25,3.5,\n");
}

TEST(MetricsCsv, SixSignificantDigits) {
    const std::string csv = format_metrics_csv({MetricsRow{1, "gan", 1.0 / 3.0, 123456789.0, {}, {}, 2.302585093, {}}});
    EXPECT_NE(csv.find(",0.333333,1.23457e+08,,,2.30259\n"), std::string::npos) << csv;
}

TEST(MetricsCsv, ParseBackWithinFormattingPrecision) {
    std::vector<MetricsRow> rows;
    RngStream rng(1, "rows");
    for (std::uint64_t i = 1; i <= 50; ++i) {
        MetricsRow r{i, "wgan", rng.uniform(-5, 5), rng.normal() * 1e-3, {}, {}, {}, {}};
        if (i % 10 == 0) r.mode_entropy = rng.uniform(0, 2.3);
        rows.push_back(r);
    }
    test::TempDir dir;
    write_metrics_csv(rows, dir / "m.csv");
    const auto back = read_metrics_csv(dir / "m.csv");
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].iteration, rows[i].iteration);
        EXPECT_EQ(back[i].model, "wgan");
        EXPECT_NEAR(*back[i].loss_d, *rows[i].loss_d, 5e-6 * std::abs(*rows[i].loss_d));
        EXPECT_NEAR(*back[i].loss_g, *rows[i].loss_g, 5e-6 * std::abs(*rows[i].loss_g));
        EXPECT_FALSE(back[i].recon.has_value());
        EXPECT_EQ(back[i].mode_entropy.has_value(), rows[i].mode_entropy.has_value());
    }
}

TEST(MetricsCsv, HingeColumnForConstrainedRuns) {
    StepMetrics m;
    m.iteration = 1;
    m.loss_d = 1.0;
    m.loss_g = 0.9;
    m.recon = 30.0;
    m.kl = 2.0;
    m.hinge_active = true;
    const std::string csv = format_metrics_csv({metrics_row(ModelKind::cvaegan, m)});
    EXPECT_EQ(csv, "iteration,model,loss_d,loss_g,recon,kl,mode_entropy,hinge_active\n1,cvaegan,1,0.9,30,2,,1\n");
    EXPECT_EQ(parse_metrics_csv(csv)[0].hinge_active, true);
}

TEST(MetricsCsv, InvalidInputs) {
    EXPECT_THROW(format_metrics_csv({}), ContractError);
    EXPECT_THROW(parse_metrics_csv("iteration,model\n1,gan\n"), FormatError);
    EXPECT_THROW(parse_metrics_csv("iteration,model,loss_d,loss_g,recon,kl,mode_entropy\n1,gan,x,,,,\n"), FormatError);
}

}  // namespace
}  // namespace genlab
