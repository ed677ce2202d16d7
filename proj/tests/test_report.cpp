#include "infbound/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace infbound;

TEST(Report, SeventeenDigitFloats)
{
    Json j;
    j["third"] = 1.0 / 3.0;
    j["big"] = 1e300;
    j["int"] = 3;
    j["flag"] = true;
    const std::string text = report_text(j);
    EXPECT_EQ(text, "{\n  \"third\": 0.33333333333333331,\n  \"big\": 1.0000000000000001e+300,\n"
                    "  \"int\": 3,\n  \"flag\": true\n}\n");
}

TEST(Report, FloatsRoundTrip)
{
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = U(rng) * std::pow(10.0, double(i % 60 - 30));
        Json j = Json::array({v});
        const auto parsed = nlohmann::json::parse(report_text(j));
        ASSERT_EQ(parsed[0].get<double>(), v);
    }
}

TEST(Report, NonFiniteBecomeStrings)
{
    Json j = Json::array({std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                          std::nan("")});
    EXPECT_EQ(report_text(j), "[\n  \"inf\",\n  \"-inf\",\n  \"nan\"\n]\n");
}

TEST(Report, EmptyContainersAndEscapes)
{
    Json j;
    j["a"] = Json::object();
    j["b"] = Json::array();
    j["c"] = "quote\"d";
    EXPECT_EQ(report_text(j), "{\n  \"a\": {},\n  \"b\": [],\n  \"c\": \"quote\\\"d\"\n}\n");
}

TEST(Report, CheckEntry)
{
    const auto c = check_entry("keq", true, -2.0, 1.5);
    EXPECT_EQ(c["name"], "keq");
    EXPECT_EQ(c["pass"], true);
    EXPECT_EQ(c["slack"].get<double>(), 3.5);
    auto it = c.begin();
    EXPECT_EQ(it.key(), "name");
}

TEST(Report, CertificateSerialisation)
{
    const auto c = verify_keq({0.125, 0.5}, 864.0, 4.0, 144.0, 100.0, 100);
    const Json j = to_json(c);
    EXPECT_EQ(j["L"].get<double>(), 864.0);
    EXPECT_EQ(j["samples"].get<int>(), 100);
    EXPECT_EQ(j["pass"], true);
    EXPECT_EQ(report_text(j), report_text(to_json(c)));
}
