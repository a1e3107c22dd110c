#include "formheat/driver.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"formheat: coupled bulk-surface heat flow solver"};
    app.require_subcommand(1);

    std::string run_path, validate_path;
    auto* run = app.add_subcommand("run", "Run the pipeline selected in a config file");
    run->add_option("config", run_path, "Config file")->required();
    auto* check = app.add_subcommand("validate", "Check a config file without running it");
    check->add_option("config", validate_path, "Config file")->required();
    auto* version = app.add_subcommand("version", "Print the version");

    CLI11_PARSE(app, argc, argv);

    if (*run) return formheat::run(run_path);
    if (*check) {
        const auto diagnostics = formheat::validate(validate_path);
        for (const auto& d : diagnostics) std::cout << d << '\n';
        return diagnostics.empty() ? 0 : 1;
    }
    if (*version) std::cout << "formheat " << formheat::kVersion << '\n';
    return 0;
}
