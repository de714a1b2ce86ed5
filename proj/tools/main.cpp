#include "pqvar/cli.hpp"

int main(int argc, char** argv)
{
  return pqvar::run_cli(argc, argv);
}
