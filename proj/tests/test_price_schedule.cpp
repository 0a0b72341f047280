int acceptance_unused_test_price_schedule;
