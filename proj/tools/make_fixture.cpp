// Writes the deterministic synthetic check-in corpus as a TSV ready for
// `sidkit ingest`.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"make_fixture: deterministic clustered check-in corpus generator"};

  fixture::Params params;
  std::string out_path = "fixture.tsv";
  app.add_option("--out", out_path, "output TSV path")->capture_default_str();
  app.add_option("--clusters", params.num_clusters, "number of POI clusters")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  app.add_option("--pois-per-cluster", params.pois_per_cluster, "POIs per cluster")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--users", params.num_users, "number of users")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--events-per-user", params.events_per_user, "check-ins per user")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", params.seed, "generator seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "make_fixture: cannot write " << out_path << "\n";
    return 1;
  }
  fixture::write_fixture_tsv(out, params);
  std::cout << "wrote " << params.num_clusters * params.pois_per_cluster << " POIs, "
            << params.num_users << " users, "
            << static_cast<long long>(params.num_users) * params.events_per_user
            << " check-ins to " << out_path << "\n";
  return 0;
}
