//! Scripted agent run that delegates a counting question to the object-memory agent.

fn main() -> vidmem::Result<()> {
    let case = vidmem::replay::case4();
    let answer = case.run()?;
    println!("{}", answer.transcript_json());
    assert_eq!(answer.choice_label, Some(case.question.answer as u8));
    Ok(())
}
