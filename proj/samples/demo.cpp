// Scores every feature subset of a small synthetic problem under a few
// criteria and prints the winner of each.

#include <iostream>

#include "pnb/pnb.hpp"

int main() {
  pnb::SyntheticSpec spec;
  spec.rows = 200;
  spec.informative = 2;
  spec.noise = 3;
  spec.seed = 11;
  const auto data = pnb::make_synthetic(spec);

  for (const char* name : {"uevi", "preq", "preq10", "loocv:log", "fcv10:01", "sevi-approx", "bic"}) {
    auto criterion = pnb::parse_criterion(name);
    criterion.seed = 5;
    const auto sel = pnb::select_best(data, criterion);
    std::cout << name << ": {" << pnb::structure_names(sel.best, data.schema()) << "} score " << sel.score.value
              << '\n';
  }
}
