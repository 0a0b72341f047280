int acceptance_unused_test_reporting;
