//! Scripted agent run: localization, then caption retrieval, then VQA.

fn main() -> vidmem::Result<()> {
    let case = vidmem::replay::case1();
    let answer = case.run()?;
    for (i, step) in answer.transcript.steps.iter().enumerate() {
        println!("step {i}: {}({})", step.action, step.action_input);
        println!("  {}", step.observation.replace('\n', "\n  "));
    }
    println!("final {:?}, choice {:?}, gold {}", answer.final_text, answer.choice_label, case.question.answer);
    Ok(())
}
