// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. RECON_AUDIT_N8=1 enables the n = 8 tier of
// the reconstruction audit; RECON_ACCEPTANCE_ONLY=1,5,12 runs a subset.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include "recon/audit.hpp"

int main() {
  using namespace recon::audit;
  Options o;
  const char* n8 = std::getenv("RECON_AUDIT_N8");
  o.tier_n8 = n8 && std::string(n8) == "1";
  o.golden_path = RECON_GOLDEN_DIR "/spider_pair.json";
  o.log = [](const std::string& s) { std::cerr << s << std::endl; };

  std::set<int> only;
  if (const char* sel = std::getenv("RECON_ACCEPTANCE_ONLY")) {
    std::stringstream ss(sel);
    std::string tok;
    while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
  }

  auto checks = all_checks();
  std::vector<CheckResult> results;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    results.push_back(timed(checks[i], o, id));
    std::cout << format_line(results.back()) << std::endl;
  }
  if (only.empty() || only.count(8)) {
    results.push_back(timed(check_csl_hierarchy, o, 0));
    std::cout << format_line(results.back()) << std::endl;
  }

  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::cout << "acceptance: " << results.size() - failed << "/" << results.size() << " passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
