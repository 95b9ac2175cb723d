#include <doctest.h>

#include <sstream>

#include "sindy/errors.hpp"
#include "sindy/io.hpp"

using namespace sindy;

namespace {

TrajectoryFile parse(const std::string& text) {
    std::istringstream is(text);
    return read_trajectory_csv(is, "test.csv");
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("Lorenz trajectory survives a CSV round trip bit for bit") {
    const auto traj = simulate(lorenz_system(), default_simulation("lorenz"));
    std::ostringstream os;
    write_trajectory_csv(os, traj, {"x", "y", "z"});
    const auto back = parse(os.str());
    CHECK(back.names == std::vector<std::string>{"x", "y", "z"});
    CHECK(back.traj.times == traj.times);
    CHECK(back.traj.states == traj.states);
    CHECK(os.str().substr(0, 8) == "t,x,y,z\n");
}

TEST_CASE("default column names") {
    Trajectory t;
    t.times = Vector::LinSpaced(3, 0, 2);
    t.states = Matrix::Ones(3, 2);
    std::ostringstream os;
    write_trajectory_csv(os, t);
    CHECK(os.str().rfind("t,x0,x1\n", 0) == 0);
}

TEST_CASE("a two-row file parses but cannot be differentiated") {
    const auto f = parse("t,x\n0,1\n0.1,2\n");
    CHECK(f.traj.rows() == 2);
    CHECK_THROWS_AS(differentiate(f.traj), DataQualityError);
}

TEST_CASE("malformed files name the offending cell") {
    const std::string nan = parse_error("t,x,y\n0,1,2\n0.1,nan,3\n");
    CHECK(nan.find("row 3") != std::string::npos);
    CHECK(nan.find("column 2") != std::string::npos);
    CHECK(parse_error("t,x\n0,1\n0.1,abc\n").find("not a number") != std::string::npos);
    CHECK(parse_error("t,x\n0,1\n0.1,2,3\n").find("has 3 fields") != std::string::npos);
    CHECK(parse_error("t,x\n0,1\n0.1,2\n0.15,3\n").find("not equidistant") != std::string::npos);
    CHECK(parse_error("t,x\n0,1\n0,2\n").find("not increasing") != std::string::npos);
    CHECK_FALSE(parse_error("").empty());
    CHECK_FALSE(parse_error("t\n0\n").empty());
}

TEST_CASE("model JSON round trip") {
    const auto sys = lorenz_system();
    const auto terms = polynomial_terms(3, 3, true);
    CoefficientModel m;
    m.xi = sys.true_coefficients(terms);
    m.support = sys.true_support(terms);
    m.terms = std::make_shared<const std::vector<TermDescriptor>>(terms);
    m.cp = Matrix::Constant(20, 3, 0.5);
    m.meta.regressor = "stcv";
    m.meta.hyperparameters = {{"cp_final", 0.3}};
    m.meta.seed = 12;
    m.meta.notes = {"hello"};
    ScalingRecord rec{Vector::Constant(3, 0.1), true};
    const Json j = model_to_json(m, {"x", "y", "z"}, rec);
    CHECK(j["equations"].size() == 3);
    CHECK(j["equations"][0]["name"] == "x");

    const auto back = model_from_json(Json::parse(j.dump()));
    CHECK(back.xi == m.xi);
    CHECK((back.support == m.support).all());
    REQUIRE(back.terms);
    CHECK(*back.terms == terms);
    REQUIRE(back.cp);
    CHECK(*back.cp == *m.cp);
    CHECK(back.meta.regressor == "stcv");
    CHECK(back.meta.seed == std::optional<std::uint64_t>(12));
    CHECK(back.meta.hyperparameters.at("cp_final") == 0.3);
    CHECK_THROWS_AS(model_from_json(Json::parse("{\"terms\": 3}")), ParseError);
}

TEST_CASE("equation listing") {
    const auto sys = lorenz_system();
    const auto terms = polynomial_terms(3, 3, true);
    CoefficientModel m;
    m.xi = sys.true_coefficients(terms);
    m.support = sys.true_support(terms);
    m.terms = std::make_shared<const std::vector<TermDescriptor>>(terms);
    const std::string text = format_equations(m, {"x", "y", "z"});
    CHECK(text.find("x' = -10.00 x +10.00 y") != std::string::npos);
    CHECK(text.find("y' = +28.00 x -1.00 y -1.00 x*z") != std::string::npos);
    CHECK(text.find("z' = -2.67 z +1.00 x*y") != std::string::npos);
    m.support.col(2).setConstant(false);
    m.xi.col(2).setZero();
    CHECK(format_equations(m).find("x2' = 0") != std::string::npos);
}

TEST_CASE("label renaming") {
    CHECK(rename_label("x0^2*x1", {"s", "v"}) == "s^2*v");
    CHECK(rename_label("1", {"s", "v"}) == "1");
    CHECK(rename_label("x1", {}) == "x1");
}

TEST_CASE("unknown keys are collected") {
    std::vector<std::string> errors;
    collect_unknown_keys(Json::parse(R"({"a":1,"b":2,"c":3})"), {"a"}, "cfg", errors);
    CHECK(errors.size() == 2);
}
