#include "kvlink/validate.hpp"

#include <iostream>

int main() {
    const auto report = kvlink::validate::run();
    std::cout << report.to_text();
    std::cout << (report.all_passed() ? "acceptance: all criteria pass" : "acceptance: some criteria fail") << '\n';
    return report.all_passed() ? 0 : 1;
}
