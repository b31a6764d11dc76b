mod oracle;

#[test]
fn cross_entropy_matches_definition() {
    oracle::cross_entropy_matches_definition();
}

#[test]
fn training_loss_is_cross_entropy_of_the_softmax() {
    oracle::training_loss_is_cross_entropy_of_the_softmax();
}

#[test]
fn exploration_score_is_mean_path_uncertainty() {
    oracle::exploration_score_is_mean_path_uncertainty();
}

#[test]
fn occupancy_score_is_path_maximum() {
    oracle::occupancy_score_is_path_maximum();
}

#[test]
fn ucb_total_matches_definition() {
    oracle::ucb_total_matches_definition();
}

#[test]
fn ensemble_reductions_match_member_loops() {
    oracle::ensemble_reductions_match_member_loops();
}

#[test]
fn bayes_update_matches_product_rule() {
    oracle::bayes_update_matches_product_rule();
}

#[test]
fn spl_matches_definition() {
    oracle::spl_matches_definition();
}

#[test]
fn map_accuracy_matches_cell_loop() {
    oracle::map_accuracy_matches_cell_loop();
}

#[test]
fn iou_matches_cell_loop() {
    oracle::iou_matches_cell_loop();
}

#[test]
fn coverage_matches_cell_loop() {
    oracle::coverage_matches_cell_loop();
}

#[test]
fn analytic_gradient_matches_central_differences() {
    oracle::analytic_gradient_matches_central_differences();
}
