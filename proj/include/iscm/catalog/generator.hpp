#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "iscm/event.hpp"

namespace iscm::catalog {

using MinuteRange = std::pair<int, int>;  ///< inclusive uniform range in minutes

/// Print-shop simulation: flyer orders, poster orders and one bill per
/// order, sharing the printers. Work happens on weekdays during opening
/// hours; finished items go to the post office in a daily delivery run.
/// The defaults reproduce the reference experiment stream.
struct GeneratorConfig {
    std::uint64_t seed = 15;
    int flyers = 780;
    int posters = 780;
    double redesign_probability = 0.3;
    int printers = 2;
    double printer1_share = 0.25;

    std::string first_day = "2019-01-28";  ///< a weekday; orders arrive from here on
    int arrival_days = 98;                  ///< working days over which orders arrive
    int open_minute = 8 * 60;
    int close_minute = 18 * 60;
    int delivery_minute = 17 * 60;
    int extra_delivery_minute = 12 * 60;

    MinuteRange design_delay{20, 180};
    MinuteRange send_delay{10, 60};
    MinuteRange customer_delay{60, 600};
    MinuteRange redesign_delay{20, 120};
    MinuteRange print_wait{5, 60};
    MinuteRange print_duration{2, 9};
    MinuteRange slow_print_duration{11, 40};
    MinuteRange bill_delay{5, 120};

    double slow_print_probability = 0.02;
    /// Months (0 = month of first_day) with a raised slow-print probability.
    std::vector<int> busy_months{2, 4};
    double busy_month_slow_probability = 0.1;

    double overlap_probability = 0.01;           ///< print job ignores the printer queue
    double missed_delivery_probability = 0.002;  ///< finished item skips a delivery run
    double extra_run_probability = 0.03;         ///< day gets a second (midday) run
    double late_bill_probability = 0.01;         ///< bill written after the order is delivered
    double early_bill_probability = 0.003;       ///< bill written before the order arrives
};

struct GeneratedLog {
    std::vector<EventRecord> events;  ///< ordered by (timestamp, event id, lifecycle)
    std::vector<EventAttribute> attributes;

    std::size_t insertion_count() const { return events.size() + attributes.size(); }
};

/// Same config, same output. Throws std::invalid_argument on a bad config.
GeneratedLog generate_log(const GeneratorConfig &config);

/// Checks every trace against its process: activity order, lifecycle pairs,
/// print attributes and bill references. Returns one message per problem.
std::vector<std::string> validate_traces(const GeneratedLog &log);

/// Package purchases and deliveries: each package is purchased, then
/// delivered 1 to 6 days later by one of `cars` cars. Attributes PackageId
/// (purchase and delivery) and CarId (delivery).
struct ShippingConfig {
    std::uint64_t seed = 1;
    int packages = 300;
    int cars = 4;
    int days = 20;
    std::string first_day = "2024-03-04";
};
GeneratedLog generate_shipping_log(const ShippingConfig &config);

/// Traces of the A/B/C process: (A B)+ C, with occasional slow or missing B.
GeneratedLog generate_abc_log(std::uint64_t seed, int traces);

/// Five hand-built A/B/C traces on a 12-hour grid, one per state at
/// `abc_scenario_now()`: PermSat, PendingSat, PendingViol and two PermViol.
GeneratedLog abc_scenario();
Timestamp abc_scenario_now();

}  // namespace iscm::catalog
