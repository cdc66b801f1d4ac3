#include <doctest.h>

#include <sstream>

#include "bnest/error.hpp"
#include "bnest/io.hpp"

using namespace bnest;

TEST_CASE("count files") {
  std::istringstream plain("3\n1\n\n# comment\n4\n");
  CHECK(read_counts(plain) == std::vector<std::int64_t>{3, 1, 4});
  std::istringstream headed("count,roi\n2,a\n0,b\n");
  CHECK(read_counts(headed) == std::vector<std::int64_t>{2, 0});
  std::istringstream negative("2\n-1\n");
  try {
    read_counts(negative);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_counts(empty), Error);
  CHECK_THROWS_AS(read_counts_file("/nonexistent/counts.txt"), Error);
}

TEST_CASE("inline count lists") {
  CHECK(parse_counts("1,2,0,3") == std::vector<std::int64_t>{1, 2, 0, 3});
  CHECK(parse_counts("1 2  5") == std::vector<std::int64_t>{1, 2, 5});
  CHECK_THROWS_AS(parse_counts("1,x"), Error);
  CHECK_THROWS_AS(parse_counts(""), Error);
}

TEST_CASE("posterior CSV") {
  PosteriorN post;
  post.support_start = 3;
  post.probs = {0.75, 0.25};
  post.log_weights = {0.0, -1.0986122886681098};
  post.truncated_at = 4;
  std::ostringstream os;
  write_posterior_csv(os, post);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,prob,log_weight");
  std::getline(in, line);
  CHECK(line.rfind("3,0.75,0", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("4,0.25,", 0) == 0);
}
