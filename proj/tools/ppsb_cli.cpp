#include <atomic>
#include <csignal>

#include "ppsb/commands.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int)
{
  g_interrupted.store(true);
}

}  // namespace

int main(int argc, char** argv)
{
  std::signal(SIGINT, on_interrupt);
  return ppsb::run_cli(argc, argv, &g_interrupted);
}
