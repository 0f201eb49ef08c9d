#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

using namespace hodgeopt;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("hodgeopt_io_") + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

} // namespace

TEST(ComplexJson, RoundTrip)
{
    TempDir dir;
    Rng rng(1);
    const SimplicialComplex c = random_vr(rng, 20, 0.5);
    write_complex(dir.path() / "c.json", c);
    EXPECT_EQ(read_complex(dir.path() / "c.json"), c);
}

TEST(ComplexJson, Schema)
{
    const Json j = complex_to_json(filled_triangle());
    EXPECT_EQ(j.at("dimension"), 2);
    EXPECT_EQ(j.at("simplices").at("1").dump(), "[[0,1],[0,2],[1,2]]");
    EXPECT_EQ(j.at("simplices").at("2").dump(), "[[0,1,2]]");
}

TEST(ComplexJson, RejectsMalformedInput)
{
    EXPECT_THROW(parse_json("{\"dimension\": ", "x"), ValidationError);
    EXPECT_THROW(complex_from_json(Json::parse(R"({"simplices": {}})")), ValidationError);
    EXPECT_THROW(complex_from_json(Json::parse(R"({"dimension": 1, "simplices": {"1": [[1, 0]]}})")), ValidationError);
    EXPECT_THROW(complex_from_json(Json::parse(R"({"dimension": 1, "simplices": {"1": [[0, 1, 2]]}})")),
                 ValidationError);
    EXPECT_THROW(complex_from_json(Json::parse(R"({"dimension": 1, "simplices": {"0": [[-1]]}})")), ValidationError);
    // A listed simplex whose face is missing violates closure.
    EXPECT_THROW(complex_from_json(Json::parse(R"({"dimension": 1, "simplices": {"0": [[0]], "1": [[0, 1]]}})")),
                 ValidationError);
}

TEST(Files, MissingAndUnwritablePathsAreIoErrors)
{
    TempDir dir;
    EXPECT_THROW(read_text(dir.path() / "absent.json"), IoError);
    write_text(dir.path() / "plain", "x");
    EXPECT_THROW(write_text(dir.path() / "plain" / "child.csv", "y"), IoError);
}

TEST(Files, WriteCreatesParentDirectories)
{
    TempDir dir;
    write_text(dir.path() / "a" / "b" / "c.txt", "hello\n");
    EXPECT_EQ(read_text(dir.path() / "a" / "b" / "c.txt"), "hello\n");
}

TEST(PointCloudCsv, RoundTripIsExact)
{
    TempDir dir;
    Rng rng(2);
    const PointCloud p = sample_unit_cube(17, 3, rng);
    write_point_cloud(dir.path() / "p.csv", p);
    EXPECT_EQ(read_point_cloud(dir.path() / "p.csv").points(), p.points());
}

TEST(Csv, ParsesAndValidates)
{
    const auto rows = parse_csv("1,2\n\n3.5, 4e-1\r\n", "t");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][1], 0.4);
    EXPECT_THROW(parse_csv("1,abc\n", "t"), ValidationError);
    EXPECT_THROW(parse_csv("1,2x\n", "t"), ValidationError);
    EXPECT_THROW(csv_matrix(parse_csv("1,2\n3\n", "t"), "t"), ValidationError);
}

TEST(Signal, ColumnAndRowLayouts)
{
    TempDir dir;
    write_text(dir.path() / "col.csv", "1\n2\n3\n");
    write_text(dir.path() / "row.csv", "1,2,3\n");
    write_text(dir.path() / "bad.csv", "1,2\n3,4\n");
    const Eigen::Vector3d expected(1, 2, 3);
    EXPECT_EQ(read_signal(dir.path() / "col.csv"), Eigen::VectorXd(expected));
    EXPECT_EQ(read_signal(dir.path() / "row.csv"), Eigen::VectorXd(expected));
    EXPECT_THROW(read_signal(dir.path() / "bad.csv"), ValidationError);
}

TEST(WeightsJson, RoundTripAndDefaults)
{
    Rng rng(3);
    const SimplicialComplex c = random_instance(rng);
    const WeightAssignment w = random_weights(c, rng);
    const WeightAssignment back = weights_from_json(Json::parse(weights_to_json(w).dump()), c);
    for (int k = 0; k <= c.dimension(); ++k) EXPECT_EQ(back.order(k), w.order(k));

    const WeightAssignment partial = weights_from_json(Json::parse(R"({"2": [0.5]})"), filled_triangle());
    EXPECT_EQ(partial.order(2)[0], 0.5);
    EXPECT_EQ(partial.order(1), Eigen::VectorXd::Ones(3));
    EXPECT_THROW(weights_from_json(Json::parse(R"({"1": [1, 2]})"), filled_triangle()), ValidationError);
    EXPECT_THROW(weights_from_json(Json::parse(R"({"1": "x"})"), filled_triangle()), ValidationError);
}

TEST(FlowCsv, Columns)
{
    const SimplicialComplex c = filled_triangle();
    const WeightAssignment w = WeightAssignment::uniform(c);
    const Eigen::VectorXd times = default_flow_times(1.0, 5);
    const FlowComponentTrace tr = flow_decomposition_trace(c, w, {1, Eigen::Vector3d(1, 0, 0)}, times);
    const auto plain = parse_csv(flow_to_csv(tr.trajectory), "f");
    const auto with = parse_csv(flow_to_csv(tr.trajectory, &tr), "f");
    ASSERT_EQ(plain.size(), 5u);
    EXPECT_EQ(plain[0].size(), 4u);
    EXPECT_EQ(with[0].size(), 7u);
    EXPECT_EQ(plain[4][0], 1.0);
}

TEST(Documents, OptimizationReportFields)
{
    const SimplicialComplex c = tetrahedron_boundary();
    const WeightOptimizationResult r = optimize_weights(c, 1, WeightObjective::lambda_min, {false, true});
    const Json j = optimization_to_json(r);
    for (const char* key : {"order", "objective", "optimize", "weights", "sdp_objective", "direct_objective",
                            "uniform_objective", "improvement_percent", "certificate"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["objective"], "lambda");
    EXPECT_EQ(j["certificate"]["status"], "optimal");
    EXPECT_EQ(j["weights"]["upper"].size(), 4u);
    EXPECT_FALSE(j["weights"].contains("lower"));
}

TEST(Documents, FormatDoubleRoundTrips)
{
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(format_double(x)), x);
}
